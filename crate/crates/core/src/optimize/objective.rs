//! Trace-fidelity objective over the flattened amplitude vector and its gradient.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::SpinChainSpec;
use crate::linalg::{trace_of_product, Operator, C64};
use crate::propagation::{axis_of, ControlSequence, ControlSystem, HermitianEigen};
use crate::targets::TargetGate;

/// Below this overlap modulus the phase of `Tr(G^dagger U)` is undefined.
pub const DEGENERATE_OVERLAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GradientMode {
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
    /// Exact derivative through the slice eigenbases.
    Analytic,
}

impl Default for GradientMode {
    fn default() -> Self {
        GradientMode::Analytic
    }
}

/// Fidelity of a fixed-length, fixed-duration schedule against one gate.
#[derive(Debug, Clone)]
pub struct GateObjective {
    system: ControlSystem,
    gate_adjoint: Operator,
    n_pulses: usize,
    slice_duration: f64,
}

impl GateObjective {
    pub fn new(
        spec: &SpinChainSpec,
        gate: &TargetGate,
        n_pulses: usize,
        slice_duration: f64,
    ) -> Result<Self> {
        let system = ControlSystem::from_spec(spec)?;
        let g = gate.matrix()?;
        if g.nrows() != system.dim() {
            return Err(Error::DimensionMismatch { expected: system.dim(), found: g.nrows() });
        }
        // Validates n_pulses and T.
        ControlSequence::zeros(n_pulses, slice_duration)?;
        Ok(GateObjective {
            system,
            gate_adjoint: g.adjoint(),
            n_pulses,
            slice_duration,
        })
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn slice_duration(&self) -> f64 {
        self.slice_duration
    }

    pub fn system(&self) -> &ControlSystem {
        &self.system
    }

    fn dim(&self) -> f64 {
        self.system.dim() as f64
    }

    fn check_len(&self, amplitudes: &[f64]) -> Result<()> {
        if amplitudes.len() != self.n_pulses {
            return Err(Error::DimensionMismatch { expected: self.n_pulses, found: amplitudes.len() });
        }
        Ok(())
    }

    pub fn sequence(&self, amplitudes: &[f64]) -> Result<ControlSequence> {
        ControlSequence::from_flattened(self.slice_duration, amplitudes)
    }

    fn slice_eigen(&self, k: usize, amplitude: f64) -> HermitianEigen {
        self.system.slice_eigen(axis_of(k), amplitude)
    }

    pub fn propagator(&self, amplitudes: &[f64]) -> Result<Operator> {
        self.check_len(amplitudes)?;
        let n = self.system.dim();
        Ok(amplitudes.iter().enumerate().fold(Operator::identity(n, n), |u, (k, &a)| {
            self.slice_eigen(k, a).exp_i(self.slice_duration) * u
        }))
    }

    /// Trace fidelity `|Tr(G^dagger U)| / dim`.
    pub fn fidelity(&self, amplitudes: &[f64]) -> Result<f64> {
        let u = self.propagator(amplitudes)?;
        Ok(trace_of_product(&self.gate_adjoint, &u).norm() / self.dim())
    }

    /// Fidelity and `dF/dh` for every amplitude.
    pub fn fidelity_and_gradient(&self, amplitudes: &[f64], mode: GradientMode) -> Result<(f64, Vec<f64>)> {
        match mode {
            GradientMode::Analytic => self.analytic(amplitudes),
            GradientMode::FiniteDifference { step } => {
                if !(step > 0.0) {
                    return Err(Error::invalid("finite_difference_step", "must be > 0"));
                }
                let f = self.fidelity(amplitudes)?;
                let mut x = amplitudes.to_vec();
                let mut grad = Vec::with_capacity(x.len());
                for k in 0..x.len() {
                    let orig = x[k];
                    x[k] = orig + step;
                    let fp = self.fidelity(&x)?;
                    x[k] = orig - step;
                    let fm = self.fidelity(&x)?;
                    x[k] = orig;
                    grad.push((fp - fm) / (2.0 * step));
                }
                Ok((f, grad))
            }
        }
    }

    fn analytic(&self, amplitudes: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(amplitudes)?;
        let n = self.system.dim();
        let t = self.slice_duration;
        let m = amplitudes.len();

        let eigs: Vec<HermitianEigen> =
            amplitudes.iter().enumerate().map(|(k, &a)| self.slice_eigen(k, a)).collect();
        let slices: Vec<Operator> = eigs.iter().map(|e| e.exp_i(t)).collect();

        // forward[k] = U_{k-1} ... U_0
        let mut forward = Vec::with_capacity(m + 1);
        forward.push(Operator::identity(n, n));
        for u in &slices {
            let next = u * forward.last().unwrap();
            forward.push(next);
        }

        let overlap = trace_of_product(&self.gate_adjoint, &forward[m]);
        let modulus = overlap.norm();
        if modulus < DEGENERATE_OVERLAP {
            return Err(Error::DegenerateObjective { overlap: modulus });
        }
        let fidelity = modulus / n as f64;
        let scale = overlap.conj() / (modulus * n as f64);

        let mut grad = vec![0.0; m];
        // backward = G^dagger U_{m-1} ... U_{k+1}
        let mut backward = self.gate_adjoint.clone();
        for k in (0..m).rev() {
            let e = &eigs[k];
            let v = &e.vectors;
            let vh = v.adjoint();
            let p = &forward[k] * &backward;
            let q = &vh * p * v;
            let c = &vh * self.system.generator(axis_of(k)) * v;
            let mut dw = C64::new(0.0, 0.0);
            for j in 0..n {
                for l in 0..n {
                    dw += q[(l, j)] * c[(j, l)] * divided_difference(e.values[j], e.values[l], t);
                }
            }
            grad[k] = (scale * dw).re;
            backward = backward * &slices[k];
        }
        Ok((fidelity, grad))
    }
}

/// `(e^{-i a t} - e^{-i b t}) / (a - b)`, with the limit `-i t e^{-i a t}` at `a = b`.
///
/// Written as `-i t e^{-i t (a+b)/2} sinc(t (a-b)/2)` to stay accurate for
/// nearly degenerate eigenvalues.
fn divided_difference(a: f64, b: f64, t: f64) -> C64 {
    let half = 0.5 * t * (a - b);
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    C64::from_polar(t * sinc, -0.5 * t * (a + b) - std::f64::consts::FRAC_PI_2)
}

/// Convenience wrapper over [`GateObjective::fidelity_and_gradient`] for a sequence.
pub fn fidelity_gradient(
    spec: &SpinChainSpec,
    seq: &ControlSequence,
    gate: &TargetGate,
    mode: GradientMode,
) -> Result<Vec<f64>> {
    let obj = GateObjective::new(spec, gate, seq.n_pulses(), seq.slice_duration)?;
    Ok(obj.fidelity_and_gradient(&seq.flattened(), mode)?.1)
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
