//! Quasi-Newton minimizer with BFGS inverse-Hessian updates, a strong-Wolfe
//! line search and an optional box `|x_i| <= bound`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::objective::{norm_inf, to_dvector};

/// Differentiable function to minimize.
pub trait Objective {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsSettings {
    /// Stop once an accepted step lowers the objective by less than this.
    pub value_tol: f64,
    /// Stop once `|grad|_inf` falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease (Armijo) constant.
    pub armijo: f64,
    /// Strong-Wolfe curvature constant.
    pub curvature: f64,
    /// Box half-width; `f64::INFINITY` for an unconstrained search.
    pub bound: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        BfgsSettings {
            value_tol: 1e-12,
            grad_tol: 1e-10,
            max_iters: 5000,
            armijo: 1e-4,
            curvature: 0.9,
            bound: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// An accepted step changed the objective by less than `value_tol`.
    ValueChange,
    /// The (projected) gradient fell below `grad_tol`.
    Gradient,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::ValueChange | Termination::Gradient)
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Objective after each accepted iteration, starting with the seed value.
    pub history: Vec<f64>,
}

/// Zeroes direction components that would leave the box at an active bound.
fn project_direction(x: &DVector<f64>, d: &mut DVector<f64>, bound: f64) {
    if bound.is_finite() {
        for i in 0..x.len() {
            if (x[i] >= bound && d[i] > 0.0) || (x[i] <= -bound && d[i] < 0.0) {
                d[i] = 0.0;
            }
        }
    }
}

fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>, bound: f64) -> f64 {
    let mut d = -g;
    project_direction(x, &mut d, bound);
    d.amax()
}

/// Plain loop so results do not depend on which product kernel the linear
/// algebra backend picks.
fn mat_vec(a: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| (0..a.ncols()).fold(0.0, |acc, j| acc + a[(i, j)] * v[j]))
}

fn mask(v: &mut DVector<f64>, active: &[bool]) {
    for (x, &a) in v.iter_mut().zip(active) {
        if a {
            *x = 0.0;
        }
    }
}

/// Step beyond which the projected path no longer moves.
fn last_breakpoint(x: &DVector<f64>, d: &DVector<f64>, bound: f64) -> f64 {
    if !bound.is_finite() {
        return f64::INFINITY;
    }
    (0..x.len())
        .filter_map(|i| match d[i] {
            di if di > 0.0 => Some((bound - x[i]) / di),
            di if di < 0.0 => Some((-bound - x[i]) / di),
            _ => None,
        })
        .fold(0.0, f64::max)
}

struct Point {
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
}

/// Evaluates along the projected path `clamp(x + alpha d)`.
struct Ray<'a, O: ?Sized> {
    obj: &'a O,
    x: &'a DVector<f64>,
    g: &'a DVector<f64>,
    d: &'a DVector<f64>,
    bound: f64,
    evaluations: usize,
}

impl<O: Objective + ?Sized> Ray<'_, O> {
    /// Point, slope along the path, and the linear model's predicted change
    /// `g0 . (x(alpha) - x0)`. `None` where the objective is undefined.
    fn eval(&mut self, alpha: f64) -> Result<Option<(Point, f64, f64)>> {
        let mut x = self.x + self.d * alpha;
        if self.bound.is_finite() {
            x.apply(|v| *v = v.clamp(-self.bound, self.bound));
        }
        self.evaluations += 1;
        match self.obj.value_and_gradient(x.as_slice()) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let g = to_dvector(&g);
                let mut slope = 0.0;
                for i in 0..x.len() {
                    if x[i].abs() < self.bound {
                        slope += g[i] * self.d[i];
                    }
                }
                let predicted = self.g.dot(&(&x - self.x));
                Ok(Some((Point { x, f, g }, slope, predicted)))
            }
            Ok(_) | Err(Error::DegenerateObjective { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Minimizer of the quadratic through `(a, fa, da)` and `(b, fb)`, kept
/// inside the central 80% of the bracket.
fn interpolate(a: f64, fa: f64, da: f64, b: f64, fb: f64) -> f64 {
    let w = b - a;
    let denom = 2.0 * (fb - fa - da * w);
    let t = if denom.abs() > 0.0 { a - da * w * w / denom } else { f64::NAN };
    let (lo, hi) = (a.min(b), a.max(b));
    let margin = 0.1 * (hi - lo);
    if t.is_finite() {
        t.clamp(lo + margin, hi - margin)
    } else {
        0.5 * (a + b)
    }
}

/// Strong-Wolfe line search (bracketing then zoom). Returns the accepted
/// point, or `None` if no sufficient decrease was found.
fn line_search<O: Objective + ?Sized>(
    ray: &mut Ray<'_, O>,
    f0: f64,
    slope0: f64,
    alpha_max: f64,
    armijo: f64,
    curvature: f64,
) -> Result<Option<Point>> {
    const MAX_EVALS: usize = 60;
    let sufficient = |predicted: f64, f: f64| f <= f0 + armijo * predicted;

    // Best point satisfying sufficient decrease so far, with its step.
    let mut best: Option<(f64, Point)> = None;
    let mut prev = (0.0, f0, slope0);
    let mut alpha = alpha_max.min(1.0);
    let mut bracket: Option<((f64, f64, f64), (f64, f64))> = None;

    for _ in 0..MAX_EVALS {
        let Some((p, slope, predicted)) = ray.eval(alpha)? else {
            bracket = Some((prev, (alpha, f64::INFINITY)));
            break;
        };
        if !sufficient(predicted, p.f) || p.f >= prev.1 && prev.0 > 0.0 {
            bracket = Some((prev, (alpha, p.f)));
            break;
        }
        if slope.abs() <= -curvature * slope0 {
            return Ok(Some(p));
        }
        let here = (alpha, p.f, slope);
        best = Some((alpha, p));
        if slope >= 0.0 {
            // Minimum lies between here and the previous step.
            bracket = Some((here, (prev.0, prev.1)));
            break;
        }
        if alpha >= alpha_max {
            // Every moving component has reached the box.
            return Ok(best.map(|(_, p)| p));
        }
        prev = here;
        alpha = (2.0 * alpha).min(alpha_max);
    }

    let Some((mut lo, mut hi)) = bracket else {
        return Ok(best.map(|(_, p)| p));
    };
    for _ in 0..MAX_EVALS {
        if (hi.0 - lo.0).abs() <= 1e-16 * (1.0 + lo.0.abs()) {
            break;
        }
        let alpha = if hi.1.is_finite() {
            interpolate(lo.0, lo.1, lo.2, hi.0, hi.1)
        } else {
            0.5 * (lo.0 + hi.0)
        };
        let Some((p, slope, predicted)) = ray.eval(alpha)? else {
            hi = (alpha, f64::INFINITY);
            continue;
        };
        if !sufficient(predicted, p.f) || p.f >= lo.1 {
            hi = (alpha, p.f);
            continue;
        }
        if slope.abs() <= -curvature * slope0 {
            return Ok(Some(p));
        }
        if slope * (hi.0 - lo.0) >= 0.0 {
            hi = (lo.0, lo.1);
        }
        lo = (alpha, p.f, slope);
        best = Some((alpha, p));
    }
    Ok(best.map(|(_, p)| p))
}

/// Minimizes `obj` from `x0`, starting from the identity inverse Hessian.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], settings: &BfgsSettings) -> Result<BfgsOutcome> {
    let n = x0.len();
    let bound = settings.bound;
    if x0.iter().any(|v| !v.is_finite() || v.abs() > bound) {
        return Err(Error::invalid("seed", format!("outside the box |x| <= {bound}")));
    }
    let (f0, g0) = obj.value_and_gradient(x0)?;
    let mut evaluations = 1;
    let mut cur = Point { x: to_dvector(x0), f: f0, g: to_dvector(&g0) };
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut history = vec![f0];
    let mut iterations = 0;
    // True while `h` is the identity (first step or right after a reset).
    let mut fresh = true;

    let termination = loop {
        if projected_gradient_norm(&cur.x, &cur.g, bound) < settings.grad_tol {
            break Termination::Gradient;
        }
        if iterations >= settings.max_iters {
            break Termination::MaxIterations;
        }

        // Components held at the box by the gradient drop out of the quasi-Newton step.
        let active: Vec<bool> = (0..n).map(|i| cur.x[i].abs() >= bound && cur.g[i] * cur.x[i] < 0.0).collect();
        let mut g_free = cur.g.clone();
        mask(&mut g_free, &active);
        let mut d = -mat_vec(&h, &g_free);
        mask(&mut d, &active);
        project_direction(&cur.x, &mut d, bound);
        let mut slope = cur.g.dot(&d);
        if !(slope < 0.0) {
            // Lost descent after projection or through roundoff: restart from steepest descent.
            h.fill_with_identity();
            fresh = true;
            d = -&cur.g;
            project_direction(&cur.x, &mut d, bound);
            slope = cur.g.dot(&d);
            if !(slope < 0.0) {
                break Termination::Gradient;
            }
        }

        let alpha_max = last_breakpoint(&cur.x, &d, bound);
        let mut ray = Ray { obj, x: &cur.x, g: &cur.g, d: &d, bound, evaluations: 0 };
        let accepted = line_search(&mut ray, cur.f, slope, alpha_max, settings.armijo, settings.curvature)?;
        evaluations += ray.evaluations;
        let Some(next) = accepted else {
            if !fresh {
                h.fill_with_identity();
                fresh = true;
                continue;
            }
            break Termination::LineSearchFailed;
        };

        iterations += 1;
        let mut s = &next.x - &cur.x;
        let mut y = &next.g - &cur.g;
        mask(&mut s, &active);
        mask(&mut y, &active);
        let sy = s.dot(&y);
        let was_fresh = fresh;
        // Curvature guard: skip updates that would break positive definiteness.
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                // Scale the identity to the observed curvature before the first update.
                h.fill_with_identity();
                h *= sy / y.dot(&y);
            }
            fresh = false;
            let rho = 1.0 / sy;
            let hy = mat_vec(&h, &y);
            let c = rho + rho * rho * y.dot(&hy);
            for j in 0..n {
                for i in 0..n {
                    h[(i, j)] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let decrease = cur.f - next.f;
        cur = next;
        history.push(cur.f);
        if decrease < settings.value_tol {
            // A stalled quasi-Newton step may just reflect a degraded curvature
            // model; only a stalled steepest-descent step counts as converged.
            if was_fresh {
                break Termination::ValueChange;
            }
            h.fill_with_identity();
            fresh = true;
        }
    };

    Ok(BfgsOutcome {
        x: cur.x.as_slice().to_vec(),
        value: cur.f,
        gradient: cur.g.as_slice().to_vec(),
        iterations,
        evaluations,
        termination,
        history,
    })
}

/// `|grad|_inf` helper for callers holding plain vectors.
pub fn gradient_norm(g: &[f64]) -> f64 {
    norm_inf(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
        scales: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(self.value_and_gradient(x)?.0)
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let mut f = 0.0;
            let mut g = vec![0.0; x.len()];
            for i in 0..x.len() {
                let d = x[i] - self.center[i];
                f += 0.5 * self.scales[i] * d * d;
                g[i] = self.scales[i] * d;
            }
            Ok((f, g))
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(self.value_and_gradient(x)?.0)
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((f, g))
        }
    }

    #[test]
    fn seed_at_optimum_stops_immediately() {
        let q = Quadratic { center: vec![1.0, -2.0, 0.5], scales: vec![1.0, 3.0, 10.0] };
        let out = minimize(&q, &[1.0, -2.0, 0.5], &BfgsSettings::default()).unwrap();
        assert!(out.iterations <= 2);
        assert!(out.termination.converged());
        assert_eq!(out.x, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let settings = BfgsSettings { value_tol: 0.0, grad_tol: 1e-12, ..Default::default() };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &settings).unwrap();
        assert!(out.termination.converged(), "{:?}", out.termination);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8, "{:?}", out.x);
    }

    #[test]
    fn accepted_iterates_never_increase() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &BfgsSettings::default()).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.history.len(), out.iterations + 1);
    }

    #[test]
    fn box_constraint_is_respected() {
        let q = Quadratic { center: vec![5.0, -0.3], scales: vec![1.0, 1.0] };
        let settings = BfgsSettings { bound: 2.0, ..Default::default() };
        let out = minimize(&q, &[0.0, 0.0], &settings).unwrap();
        assert!(out.termination.converged());
        assert!((out.x[0] - 2.0).abs() < 1e-12);
        assert!((out.x[1] + 0.3).abs() < 1e-6);
        assert!(minimize(&q, &[3.0, 0.0], &settings).is_err());
    }

    #[test]
    fn max_iterations_is_not_convergence() {
        let settings = BfgsSettings { max_iters: 3, ..Default::default() };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &settings).unwrap();
        assert_eq!(out.termination, Termination::MaxIterations);
        assert!(!out.termination.converged());
    }
}
