//! Dimension of the dynamical Lie algebra generated by drift and controls.
//!
//! Operators are mapped to skew-Hermitian `iH`, flattened into real vectors
//! `(Re, Im)` of length `2 d^2`, and closed under commutation while keeping an
//! orthonormal basis for the inner product `<A, B> = Re Tr(A^dagger B)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_control_generators, build_drift, SpinChainSpec};
use crate::linalg::{commutator, hermiticity_deviation, Operator, C64, I};

/// Post-orthogonalization norm a commutator needs to count as new.
pub const DEFAULT_ADMISSION_TOL: f64 = 1e-10;
/// Generators must be Hermitian and traceless to this tolerance.
pub const GENERATOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Controllability {
    /// Dimension `4^N - 1`: the algebra is su(2^N).
    Full,
    /// Strictly smaller algebra.
    Subspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlaReport {
    pub n_qubits: usize,
    pub generators: Vec<String>,
    pub dimension: usize,
    /// `n^2 - 1` with `n = 2^N`.
    pub expected_dimension: usize,
    /// Commutator sweeps until one admitted nothing new.
    pub sweeps: usize,
    pub commutators_evaluated: usize,
    /// `max |<b_i, b_j> - delta_ij|` over the final basis.
    pub orthonormality_residual: f64,
    pub controllability: Controllability,
}

fn flatten(a: &Operator) -> DVector<f64> {
    let mut v = DVector::zeros(2 * a.len());
    for (k, z) in a.iter().enumerate() {
        v[2 * k] = z.re;
        v[2 * k + 1] = z.im;
    }
    v
}

fn unflatten(v: &DVector<f64>, dim: usize) -> Operator {
    Operator::from_iterator(dim, dim, (0..dim * dim).map(|k| C64::new(v[2 * k], v[2 * k + 1])))
}

/// Projection onto su(n). Commutators lie there exactly; this removes the
/// rounding noise that normalizing small remainders would otherwise amplify.
fn traceless_skew_part(a: &Operator) -> Operator {
    let n = a.nrows();
    let mut s = (a - a.adjoint()) * C64::from(0.5);
    let mean = s.trace() / C64::from(n as f64);
    for k in 0..n {
        s[(k, k)] -= mean;
    }
    s
}

struct Basis {
    dim: usize,
    vectors: Vec<DVector<f64>>,
    operators: Vec<Operator>,
    tol: f64,
}

impl Basis {
    /// Gram-Schmidt twice against the current basis; admits the remainder when
    /// its norm exceeds the tolerance.
    fn admit(&mut self, op: &Operator) -> bool {
        let mut v = flatten(&traceless_skew_part(op));
        for _ in 0..2 {
            for b in &self.vectors {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
            v = flatten(&traceless_skew_part(&unflatten(&v, self.dim)));
        }
        let norm = v.norm();
        if norm > self.tol {
            v /= norm;
            self.operators.push(unflatten(&v, self.dim));
            self.vectors.push(v);
            true
        } else {
            false
        }
    }

    fn residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// Closure of `{i H_k}` under commutation, with the default admission tolerance.
pub fn dla_dimension(generators: &[(String, Operator)]) -> Result<DlaReport> {
    dla_dimension_with_tol(generators, DEFAULT_ADMISSION_TOL)
}

pub fn dla_dimension_with_tol(generators: &[(String, Operator)], tol: f64) -> Result<DlaReport> {
    let first = generators
        .first()
        .ok_or_else(|| Error::invalid("generators", "at least one generator is required"))?;
    let dim = first.1.nrows();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::invalid("generators", format!("dimension {dim} is not 2^N")));
    }
    for (label, h) in generators {
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.nrows() });
        }
        let deviation = hermiticity_deviation(h);
        if !(deviation <= GENERATOR_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = h.trace().norm();
        if !(trace <= GENERATOR_TOL) {
            return Err(Error::invalid(
                "generators",
                format!("{label} is not traceless (|Tr| = {trace:.3e})"),
            ));
        }
    }

    let mut basis = Basis { dim, vectors: Vec::new(), operators: Vec::new(), tol };
    for (_, h) in generators {
        let norm = h.norm();
        if norm > 0.0 {
            basis.admit(&(h * (I / C64::from(norm))));
        }
    }

    let mut frontier = 0..basis.operators.len();
    let mut sweeps = 0;
    let mut commutators_evaluated = 0;
    while !frontier.is_empty() {
        sweeps += 1;
        let before = basis.operators.len();
        for p in frontier.clone() {
            // New elements against everything admitted so far, including this sweep.
            let mut q = 0;
            while q < basis.operators.len() {
                if q != p {
                    let c = commutator(&basis.operators[p], &basis.operators[q]);
                    commutators_evaluated += 1;
                    basis.admit(&c);
                }
                q += 1;
            }
        }
        frontier = before..basis.operators.len();
    }

    let n_qubits = dim.trailing_zeros() as usize;
    let dimension = basis.vectors.len();
    let expected_dimension = dim * dim - 1;
    Ok(DlaReport {
        n_qubits,
        generators: generators.iter().map(|(l, _)| l.clone()).collect(),
        dimension,
        expected_dimension,
        sweeps,
        commutators_evaluated,
        orthonormality_residual: basis.residual(),
        controllability: if dimension == expected_dimension {
            Controllability::Full
        } else {
            Controllability::Subspace
        },
    })
}

/// Which control generators enter the algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSet {
    Xy,
    X,
    Y,
}

impl std::str::FromStr for ControlSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(ControlSet::Xy),
            "x" => Ok(ControlSet::X),
            "y" => Ok(ControlSet::Y),
            other => Err(Error::invalid("controls", format!("unknown control set `{other}` (xy, x, y)"))),
        }
    }
}

/// Drift plus the chosen (possibly leakage-weighted) control generators of `spec`.
pub fn chain_generators(spec: &SpinChainSpec, controls: ControlSet) -> Result<Vec<(String, Operator)>> {
    let drift = build_drift(spec)?;
    let (cx, cy) = build_control_generators(spec)?;
    let mut out = vec![("H_d".to_string(), drift)];
    if matches!(controls, ControlSet::Xy | ControlSet::X) {
        out.push(("C_x".to_string(), cx));
    }
    if matches!(controls, ControlSet::Xy | ControlSet::Y) {
        out.push(("C_y".to_string(), cy));
    }
    Ok(out)
}

/// DLA of the chain with its leakage-weighted x/y controls.
pub fn verify_leakage_controllability(spec: &SpinChainSpec) -> Result<DlaReport> {
    dla_dimension(&chain_generators(spec, ControlSet::Xy)?)
}
