//! Ideal low-pass filtering of piecewise-constant schedules and evolution
//! under the resulting continuous fields.
//!
//! Filtering the indicator of `[t0, t1]` to `|omega| <= omega0` gives
//! `(Si(omega0 (t1 - t)) - Si(omega0 (t0 - t))) / pi`, so with
//! `a_m(t) = Si(omega0 (m T - t))` the filtered fields are
//!
//! ```text
//! h_x(t) = (1/pi) sum_n h_{x,n} [a_{2n-1}(t) - a_{2n-2}(t)]
//! h_y(t) = (1/pi) sum_n h_{y,n} [a_{2n}(t)   - a_{2n-1}(t)]
//! ```

mod si;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use si::{si, si_antiderivative};

use crate::error::{Error, Result};
use crate::hamiltonians::SpinChainSpec;
use crate::linalg::{Operator, C64};
use crate::optimize::{distinct_optima, OptimizationReport};
use crate::propagation::{trace_fidelity, ControlSequence, ControlSystem, HermitianEigen, Propagator};
use crate::targets::TargetGate;

/// Initial substeps per slice.
pub const DEFAULT_SUBSTEPS: usize = 64;
/// `K -> 2K` fidelity change accepted as converged.
pub const SELF_CONVERGENCE_TOL: f64 = 1e-8;
/// Refinement gives up beyond this many substeps per slice.
pub const MAX_SUBSTEPS: usize = 1 << 14;

/// Band-limited version of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredControl {
    pub source: ControlSequence,
    /// Cutoff angular frequency `omega0`, in units of J.
    pub cutoff: f64,
}

/// Low-pass filters `seq` at `cutoff`.
pub fn filter_fields(seq: &ControlSequence, cutoff: f64) -> Result<FilteredControl> {
    seq.validate()?;
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::invalid("cutoff", format!("omega0 = {cutoff} must be positive and finite")));
    }
    Ok(FilteredControl { source: seq.clone(), cutoff })
}

impl FilteredControl {
    pub fn total_time(&self) -> f64 {
        self.source.total_time()
    }

    /// Combines per-boundary values `b_m` (`m = 0..=N_f`) into `(h_x, h_y)`.
    fn combine(&self, b: &[f64]) -> (f64, f64) {
        let mut hx = 0.0;
        let mut hy = 0.0;
        for (n, (&ax, &ay)) in self.source.hx.iter().zip(&self.source.hy).enumerate() {
            hx += ax * (b[2 * n + 1] - b[2 * n]);
            hy += ay * (b[2 * n + 2] - b[2 * n + 1]);
        }
        (hx / PI, hy / PI)
    }

    /// `(h_x(t), h_y(t))`; defined for every real `t`.
    pub fn fields(&self, t: f64) -> (f64, f64) {
        let w = self.cutoff;
        let tau = self.source.slice_duration;
        let a: Vec<f64> = (0..=self.source.n_pulses()).map(|m| si(w * (m as f64 * tau - t))).collect();
        self.combine(&a)
    }

    pub fn hx(&self, t: f64) -> f64 {
        self.fields(t).0
    }

    pub fn hy(&self, t: f64) -> f64 {
        self.fields(t).1
    }

    /// Mean of `(h_x, h_y)` over `[t0, t1]`, from the antiderivative of `Si`.
    pub fn cell_average(&self, t0: f64, t1: f64) -> (f64, f64) {
        let w = self.cutoff;
        let tau = self.source.slice_duration;
        let scale = 1.0 / (w * (t1 - t0));
        let b: Vec<f64> = (0..=self.source.n_pulses())
            .map(|m| {
                let c = m as f64 * tau;
                scale * (si_antiderivative(w * (c - t0)) - si_antiderivative(w * (c - t1)))
            })
            .collect();
        self.combine(&b)
    }

    /// `n_points` equally spaced samples `(t, h_x, h_y)` on `[0, t_f]`.
    pub fn trace(&self, n_points: usize) -> Vec<(f64, f64, f64)> {
        let tf = self.total_time();
        let last = n_points.saturating_sub(1).max(1) as f64;
        (0..n_points)
            .map(|i| {
                let t = tf * i as f64 / last;
                let (hx, hy) = self.fields(t);
                (t, hx, hy)
            })
            .collect()
    }
}

/// How the field is frozen on each substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Field at the substep midpoint.
    #[default]
    Midpoint,
    /// Exact mean of the field over the substep.
    CellAverage,
}

/// Product formula over `N_f K` substeps of length `T / K`, restricted to `[0, t_f]`.
pub fn propagate_filtered(spec: &SpinChainSpec, filtered: &FilteredControl, substeps: usize) -> Result<Propagator> {
    propagate_filtered_with(spec, filtered, substeps, Sampling::Midpoint)
}

pub fn propagate_filtered_with(
    spec: &SpinChainSpec,
    filtered: &FilteredControl,
    substeps: usize,
    sampling: Sampling,
) -> Result<Propagator> {
    if substeps == 0 {
        return Err(Error::invalid("substeps", "K must be >= 1"));
    }
    let system = ControlSystem::from_spec(spec)?;
    Ok(propagate_on(&system, filtered, substeps, sampling))
}

fn propagate_on(system: &ControlSystem, filtered: &FilteredControl, substeps: usize, sampling: Sampling) -> Propagator {
    let n = system.dim();
    let steps = filtered.source.n_pulses() * substeps;
    let dt = filtered.source.slice_duration / substeps as f64;
    (0..steps).fold(Operator::identity(n, n), |u, k| {
        let t0 = k as f64 * dt;
        let (hx, hy) = match sampling {
            Sampling::Midpoint => filtered.fields(t0 + 0.5 * dt),
            Sampling::CellAverage => filtered.cell_average(t0, t0 + dt),
        };
        let h = &system.drift + &system.cx * C64::from(hx) + &system.cy * C64::from(hy);
        HermitianEigen::new_unchecked(h).exp_i(dt) * u
    })
}

/// Substep refinement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilteredPropagation {
    pub initial_substeps: usize,
    pub tolerance: f64,
    pub max_substeps: usize,
    pub sampling: Sampling,
}

impl Default for FilteredPropagation {
    fn default() -> Self {
        FilteredPropagation {
            initial_substeps: DEFAULT_SUBSTEPS,
            tolerance: SELF_CONVERGENCE_TOL,
            max_substeps: MAX_SUBSTEPS,
            sampling: Sampling::Midpoint,
        }
    }
}

impl FilteredPropagation {
    pub fn validate(&self) -> Result<()> {
        if self.initial_substeps == 0 || self.max_substeps < self.initial_substeps {
            return Err(Error::invalid("substeps", "need 1 <= initial_substeps <= max_substeps"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredFidelity {
    pub cutoff: f64,
    pub fidelity: f64,
    pub gate_error: f64,
    /// Substeps per slice of the reported value.
    pub substeps: usize,
    /// `|F(K) - F(K/2)|` at the reported `K`.
    pub refinement_change: f64,
}

/// Trace fidelity under the filtered fields, doubling `K` until the change
/// drops below the tolerance.
pub fn filtered_fidelity(
    spec: &SpinChainSpec,
    filtered: &FilteredControl,
    gate: &TargetGate,
    settings: &FilteredPropagation,
) -> Result<FilteredFidelity> {
    settings.validate()?;
    let system = ControlSystem::from_spec(spec)?;
    let g = gate.matrix()?;
    if g.nrows() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: g.nrows() });
    }
    let fid = |k: usize| trace_fidelity(&propagate_on(&system, filtered, k, settings.sampling), gate);

    let mut k = settings.initial_substeps;
    let mut previous = fid(k)?;
    loop {
        if 2 * k > settings.max_substeps {
            return Err(Error::Numerical(format!(
                "filtered propagation not converged at K = {k} (omega0 = {})",
                filtered.cutoff
            )));
        }
        k *= 2;
        let current = fid(k)?;
        let change = (current - previous).abs();
        if change < settings.tolerance {
            return Ok(FilteredFidelity {
                cutoff: filtered.cutoff,
                fidelity: current,
                gate_error: 1.0 - current,
                substeps: k,
                refinement_change: change,
            });
        }
        previous = current;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffScan {
    /// Fidelity of the unfiltered schedule.
    pub pwc_fidelity: f64,
    pub rows: Vec<FilteredFidelity>,
}

/// Filtered fidelity for each cutoff, in the given order.
pub fn cutoff_scan(
    spec: &SpinChainSpec,
    seq: &ControlSequence,
    gate: &TargetGate,
    cutoffs: &[f64],
    settings: &FilteredPropagation,
) -> Result<CutoffScan> {
    let pwc_fidelity = trace_fidelity(&crate::propagation::propagate(spec, seq)?, gate)?;
    let rows = cutoffs
        .par_iter()
        .map(|&w| filtered_fidelity(spec, &filter_fields(seq, w)?, gate, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(CutoffScan { pwc_fidelity, rows })
}

/// Filtered performance of one optimum from a global search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCandidate {
    pub start_index: usize,
    pub pwc_fidelity: f64,
    pub filtered: FilteredFidelity,
    pub sequence: ControlSequence,
}

/// Among the distinct converged optima of `report` with `1 - F <= max_error`,
/// the one whose filtered fidelity at `cutoff` is highest (ties to the lowest
/// start index). Candidates are returned best first.
pub fn rank_by_filtered_fidelity(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    report: &OptimizationReport,
    max_error: f64,
    cutoff: f64,
    settings: &FilteredPropagation,
) -> Result<Vec<FilterCandidate>> {
    let tau = report.best_sequence.slice_duration;
    let pool: Vec<_> = distinct_optima(&report.local_searches)
        .into_iter()
        .filter(|r| 1.0 - r.final_fidelity <= max_error)
        .collect();
    let mut ranked = pool
        .par_iter()
        .map(|r| {
            let sequence = ControlSequence::from_flattened(tau, &r.final_amplitudes)?;
            let filtered = filtered_fidelity(spec, &filter_fields(&sequence, cutoff)?, gate, settings)?;
            Ok(FilterCandidate { start_index: r.start_index, pwc_fidelity: r.final_fidelity, filtered, sequence })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.filtered
            .fidelity
            .total_cmp(&a.filtered.fidelity)
            .then(a.start_index.cmp(&b.start_index))
    });
    Ok(ranked)
}
