//! Piecewise-constant evolution under alternating x/y control pulses.
//!
//! A schedule of `N_f` slices of duration `T` starts with an x pulse on
//! `[0, T)`, followed by a y pulse on `[T, 2T)`, and so on. The total
//! propagator is the time-ordered product with later slices on the left.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_control_generators, build_drift, SpinChainSpec};
use crate::linalg::{hermiticity_deviation, trace_of_product, Operator, C64};
use crate::targets::TargetGate;

/// Generators passed to the exponential must be Hermitian to this tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Unitary time-evolution operator.
pub type Propagator = Operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// One constant-amplitude slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub axis: Axis,
    pub amplitude: f64,
}

/// Alternating x/y schedule with `hx.len() == hy.len() == N_f / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub slice_duration: f64,
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
}

impl ControlSequence {
    pub fn new(slice_duration: f64, hx: Vec<f64>, hy: Vec<f64>) -> Result<Self> {
        let seq = ControlSequence { slice_duration, hx, hy };
        seq.validate()?;
        Ok(seq)
    }

    pub fn zeros(n_pulses: usize, slice_duration: f64) -> Result<Self> {
        if n_pulses < 2 || n_pulses % 2 != 0 {
            return Err(Error::invalid("n_pulses", format!("{n_pulses} must be even and >= 2")));
        }
        Self::new(slice_duration, vec![0.0; n_pulses / 2], vec![0.0; n_pulses / 2])
    }

    /// Builds a schedule from `[h_x1, h_y1, h_x2, h_y2, ...]`.
    pub fn from_flattened(slice_duration: f64, amplitudes: &[f64]) -> Result<Self> {
        if amplitudes.len() < 2 || amplitudes.len() % 2 != 0 {
            return Err(Error::invalid(
                "n_pulses",
                format!("{} must be even and >= 2", amplitudes.len()),
            ));
        }
        let hx = amplitudes.iter().step_by(2).copied().collect();
        let hy = amplitudes.iter().skip(1).step_by(2).copied().collect();
        Self::new(slice_duration, hx, hy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slice_duration > 0.0 && self.slice_duration.is_finite()) {
            return Err(Error::invalid(
                "slice_duration",
                format!("T = {} must be positive and finite", self.slice_duration),
            ));
        }
        if self.hx.is_empty() || self.hx.len() != self.hy.len() {
            return Err(Error::invalid(
                "amplitudes",
                format!("need equal, nonzero x/y counts (got {} and {})", self.hx.len(), self.hy.len()),
            ));
        }
        if self.hx.iter().chain(&self.hy).any(|h| !h.is_finite()) {
            return Err(Error::invalid("amplitudes", "all amplitudes must be finite"));
        }
        Ok(())
    }

    /// Checks `|h| <= a_max` for every amplitude.
    pub fn check_box(&self, a_max: f64) -> Result<()> {
        match self.hx.iter().chain(&self.hy).find(|h| h.abs() > a_max) {
            Some(h) => Err(Error::invalid("amplitudes", format!("|{h}| exceeds box {a_max}"))),
            None => Ok(()),
        }
    }

    pub fn n_pulses(&self) -> usize {
        2 * self.hx.len()
    }

    pub fn total_time(&self) -> f64 {
        self.n_pulses() as f64 * self.slice_duration
    }

    pub fn flattened(&self) -> Vec<f64> {
        self.hx.iter().zip(&self.hy).flat_map(|(&x, &y)| [x, y]).collect()
    }

    pub fn slices(&self) -> Vec<Slice> {
        self.flattened()
            .into_iter()
            .enumerate()
            .map(|(k, amplitude)| Slice { axis: axis_of(k), amplitude })
            .collect()
    }
}

/// Axis of the 0-based flattened slice `k`.
pub fn axis_of(k: usize) -> Axis {
    if k % 2 == 0 {
        Axis::X
    } else {
        Axis::Y
    }
}

/// Spectral decomposition `H = V diag(lambda) V^dagger` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: Operator,
}

impl HermitianEigen {
    /// Decomposes `h` without checking hermiticity.
    pub fn new_unchecked(h: Operator) -> Self {
        let e = h.symmetric_eigen();
        HermitianEigen {
            values: e.eigenvalues,
            vectors: e.eigenvectors,
        }
    }

    pub fn new(h: Operator) -> Result<Self> {
        let deviation = hermiticity_deviation(&h);
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::new_unchecked(h))
    }

    /// `exp(-i H t)`.
    pub fn exp_i(&self, t: f64) -> Operator {
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&l| C64::from_polar(1.0, -l * t))
            .collect();
        let mut scaled = self.vectors.clone();
        for (mut col, ph) in scaled.column_iter_mut().zip(&phases) {
            col *= *ph;
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i H t)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian_generator(h: &Operator, t: f64) -> Result<Propagator> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    Ok(HermitianEigen::new(h.clone())?.exp_i(t))
}

/// Drift plus the two control generators of a chain.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    pub drift: Operator,
    pub cx: Operator,
    pub cy: Operator,
}

impl ControlSystem {
    pub fn from_spec(spec: &SpinChainSpec) -> Result<Self> {
        let drift = build_drift(spec)?;
        let (cx, cy) = build_control_generators(spec)?;
        Ok(ControlSystem { drift, cx, cy })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn generator(&self, axis: Axis) -> &Operator {
        match axis {
            Axis::X => &self.cx,
            Axis::Y => &self.cy,
        }
    }

    /// `H_d + h C_axis`.
    pub fn slice_hamiltonian(&self, axis: Axis, amplitude: f64) -> Operator {
        &self.drift + self.generator(axis) * C64::from(amplitude)
    }

    pub fn slice_eigen(&self, axis: Axis, amplitude: f64) -> HermitianEigen {
        HermitianEigen::new_unchecked(self.slice_hamiltonian(axis, amplitude))
    }

    /// Ordered product over arbitrary slices, first slice rightmost.
    pub fn propagate_slices(&self, slices: &[Slice], slice_duration: f64) -> Propagator {
        let n = self.dim();
        slices.iter().fold(Operator::identity(n, n), |u, s| {
            self.slice_eigen(s.axis, s.amplitude).exp_i(slice_duration) * u
        })
    }

    pub fn propagate(&self, seq: &ControlSequence) -> Propagator {
        self.propagate_slices(&seq.slices(), seq.slice_duration)
    }
}

/// Total propagator `U(t_f)` of `seq` on the chain `spec`.
pub fn propagate(spec: &SpinChainSpec, seq: &ControlSequence) -> Result<Propagator> {
    seq.validate()?;
    Ok(ControlSystem::from_spec(spec)?.propagate(seq))
}

/// `|Tr(U^dagger G)| / dim`.
pub fn fidelity_with_matrix(u: &Operator, gate: &Operator) -> Result<f64> {
    if u.shape() != gate.shape() {
        return Err(Error::DimensionMismatch { expected: gate.nrows(), found: u.nrows() });
    }
    Ok(trace_of_product(&u.adjoint(), gate).norm() / u.nrows() as f64)
}

/// Trace fidelity `2^-N |Tr(U^dagger U_gate)|`.
pub fn trace_fidelity(u: &Propagator, gate: &TargetGate) -> Result<f64> {
    fidelity_with_matrix(u, &gate.matrix()?)
}
