//! Drift and control operators of a nearest-neighbor Heisenberg chain.
//!
//! Units: hbar = 1, energies in units of the exchange constant J (J = 1),
//! times in units of 1/J. Qubits are labelled 1..=N; qubit 1 is the most
//! significant tensor factor of the computational basis index. The chain is
//! open (bonds i, i+1 for i = 1..N-1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli_string, Operator, Pauli, C64};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 10;

/// Exchange anisotropy of the drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Coupling {
    /// Isotropic Heisenberg exchange.
    Xxx,
    /// Uniaxial anisotropy `delta` on the zz term.
    Xxz { delta: f64 },
    /// Fully anisotropic exchange, constants in units of J.
    Xyz { jx: f64, jy: f64, jz: f64 },
}

impl Coupling {
    /// Coefficients of (S^x S^x, S^y S^y, S^z S^z) per bond.
    pub fn exchange_constants(&self) -> [f64; 3] {
        match *self {
            Coupling::Xxx => [1.0, 1.0, 1.0],
            Coupling::Xxz { delta } => [1.0, 1.0, delta],
            Coupling::Xyz { jx, jy, jz } => [jx, jy, jz],
        }
    }
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Xxx
    }
}

/// Physical description of the chain and its control coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinChainSpec {
    pub n_qubits: usize,
    #[serde(default)]
    pub coupling: Coupling,
    /// Static global field along z (Omega, in J). Zero means absent.
    #[serde(default)]
    pub global_field: f64,
    /// Leakage decay rate mu_L. `None` means perfectly local control, which is
    /// identical to `Some(f64::INFINITY)`.
    #[serde(default)]
    pub leakage: Option<f64>,
    /// 1-based index of the actuator qubit.
    #[serde(default = "default_actuator")]
    pub actuator: usize,
}

fn default_actuator() -> usize {
    1
}

impl SpinChainSpec {
    /// Isotropic chain of `n_qubits`, actuator on qubit 1, no field, no leakage.
    pub fn xxx(n_qubits: usize) -> Self {
        SpinChainSpec {
            n_qubits,
            coupling: Coupling::Xxx,
            global_field: 0.0,
            leakage: None,
            actuator: 1,
        }
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_global_field(mut self, omega: f64) -> Self {
        self.global_field = omega;
        self
    }

    pub fn with_leakage(mut self, mu: Option<f64>) -> Self {
        self.leakage = mu;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_QUBITS..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::invalid(
                "n_qubits",
                format!(
                    "{} outside supported range [{MIN_QUBITS}, {MAX_QUBITS}]",
                    self.n_qubits
                ),
            ));
        }
        if self.actuator < 1 || self.actuator > self.n_qubits {
            return Err(Error::invalid(
                "actuator",
                format!("qubit {} not in 1..={}", self.actuator, self.n_qubits),
            ));
        }
        if !self.global_field.is_finite() {
            return Err(Error::invalid("global_field", "must be finite"));
        }
        if let Some(mu) = self.leakage {
            if mu.is_nan() || mu < 0.0 {
                return Err(Error::invalid("leakage", format!("mu_L = {mu} must be >= 0")));
            }
        }
        if self
            .coupling
            .exchange_constants()
            .iter()
            .any(|c| !c.is_finite())
        {
            return Err(Error::invalid("coupling", "exchange constants must be finite"));
        }
        Ok(())
    }

    /// Weight of the control field on qubit `j` (1-based):
    /// `exp(-mu_L (j - a)^2)` with `a` the actuator.
    pub fn leakage_weight(&self, j: usize) -> f64 {
        let d = j.abs_diff(self.actuator) as f64;
        match self.leakage {
            _ if d == 0.0 => 1.0,
            None => 0.0,
            Some(mu) => (-mu * d * d).exp(),
        }
    }
}

/// Drift Hamiltonian in Pauli form,
/// `sum_i (Jx X_i X_{i+1} + Jy Y_i Y_{i+1} + Jz Z_i Z_{i+1}) / 4 - (Omega/2) sum_i Z_i`.
pub fn build_drift(spec: &SpinChainSpec) -> Result<Operator> {
    spec.validate()?;
    let n = spec.n_qubits;
    let [jx, jy, jz] = spec.coupling.exchange_constants();
    let mut h = Operator::zeros(spec.dim(), spec.dim());
    for i in 0..n - 1 {
        for (p, c) in [(Pauli::X, jx), (Pauli::Y, jy), (Pauli::Z, jz)] {
            if c != 0.0 {
                h += pauli_string(n, &[(i, p), (i + 1, p)]) * C64::from(c / 4.0);
            }
        }
    }
    if spec.global_field != 0.0 {
        for i in 0..n {
            h -= pauli_string(n, &[(i, Pauli::Z)]) * C64::from(spec.global_field / 2.0);
        }
    }
    Ok(h)
}

/// Control generators `(C_x, C_y)` multiplying `h_x(t)` and `h_y(t)`:
/// `C_a = (1/2) sum_j w_j sigma^a_j` with leakage weights `w_j`.
pub fn build_control_generators(spec: &SpinChainSpec) -> Result<(Operator, Operator)> {
    spec.validate()?;
    let n = spec.n_qubits;
    let mut cx = Operator::zeros(spec.dim(), spec.dim());
    let mut cy = Operator::zeros(spec.dim(), spec.dim());
    for j in 1..=n {
        let w = spec.leakage_weight(j);
        if w == 0.0 {
            continue;
        }
        let half = C64::from(w / 2.0);
        cx += pauli_string(n, &[(j - 1, Pauli::X)]) * half;
        cy += pauli_string(n, &[(j - 1, Pauli::Y)]) * half;
    }
    Ok((cx, cy))
}

/// Spin operator `S^a_j = sigma^a_j / 2` on qubit `j` (1-based).
pub fn spin_operator(n_qubits: usize, j: usize, axis: Pauli) -> Operator {
    pauli_string(n_qubits, &[(j - 1, axis)]) * C64::from(0.5)
}
