//! Target unitaries embedded in the chain Hilbert space.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_deviation, Operator, C64, ONE, ZERO};
use crate::propagation::ControlSequence;

/// Tolerance on `U^dagger U = 1` for user-supplied matrices.
pub const CUSTOM_UNITARITY_TOL: f64 = 1e-10;

/// The kind of gate to synthesize. Qubit indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GateKind {
    /// Controls on qubits 1 and 2, target qubit 3.
    Toffoli,
    /// Control qubit 1, swaps qubits 2 and 3.
    Fredkin,
    Cnot { control: usize, target: usize },
    /// `exp(i theta SWAP) = cos(theta) 1 + i sin(theta) SWAP` on `qubits`.
    Eswap { theta: f64, qubits: (usize, usize) },
    /// Row-major `(re, im)` entries.
    Custom { matrix: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetGate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub n_qubits: usize,
}

impl TargetGate {
    pub fn toffoli() -> Self {
        TargetGate { kind: GateKind::Toffoli, n_qubits: 3 }
    }

    pub fn fredkin() -> Self {
        TargetGate { kind: GateKind::Fredkin, n_qubits: 3 }
    }

    /// CNOT between qubits 2 (control) and 3 (target) of a three-qubit chain.
    pub fn cnot_23() -> Self {
        TargetGate {
            kind: GateKind::Cnot { control: 2, target: 3 },
            n_qubits: 3,
        }
    }

    /// Standalone two-qubit eSWAP.
    pub fn eswap(theta: f64) -> Self {
        TargetGate {
            kind: GateKind::Eswap { theta, qubits: (1, 2) },
            n_qubits: 2,
        }
    }

    /// eSWAP on qubits 2 and 3 of a three-qubit chain.
    pub fn eswap_embedded(theta: f64) -> Self {
        TargetGate {
            kind: GateKind::Eswap { theta, qubits: (2, 3) },
            n_qubits: 3,
        }
    }

    pub fn custom(matrix: &Operator) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::invalid("gate", "custom matrix must be 2^N x 2^N"));
        }
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| [matrix[(i, j)].re, matrix[(i, j)].im]).collect())
            .collect();
        let gate = TargetGate {
            kind: GateKind::Custom { matrix: rows },
            n_qubits: dim.trailing_zeros() as usize,
        };
        gate.matrix()?;
        Ok(gate)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// The gate as a dense unitary on `2^n_qubits` dimensions.
    pub fn matrix(&self) -> Result<Operator> {
        gate_matrix(self)
    }
}

impl fmt::Display for TargetGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GateKind::Toffoli => write!(f, "toffoli"),
            GateKind::Fredkin => write!(f, "fredkin"),
            GateKind::Cnot { control, target } => write!(f, "cnot({control},{target})"),
            GateKind::Eswap { theta, qubits } => {
                write!(f, "eswap({theta}; {},{})", qubits.0, qubits.1)
            }
            GateKind::Custom { .. } => write!(f, "custom"),
        }?;
        write!(f, "[N={}]", self.n_qubits)
    }
}

fn check_qubits(n: usize, qubits: &[usize]) -> Result<()> {
    for (k, &q) in qubits.iter().enumerate() {
        if q < 1 || q > n {
            return Err(Error::invalid("gate", format!("qubit {q} not in 1..={n}")));
        }
        if qubits[..k].contains(&q) {
            return Err(Error::invalid("gate", format!("qubit {q} used twice")));
        }
    }
    Ok(())
}

fn bit(index: usize, n: usize, qubit: usize) -> usize {
    (index >> (n - qubit)) & 1
}

fn flip(index: usize, n: usize, qubit: usize) -> usize {
    index ^ (1 << (n - qubit))
}

/// Basis permutation acting as `idx -> perm(idx)`.
fn permutation_matrix(n: usize, perm: impl Fn(usize) -> usize) -> Operator {
    let dim = 1 << n;
    let mut m = Operator::zeros(dim, dim);
    for idx in 0..dim {
        m[(perm(idx), idx)] = ONE;
    }
    m
}

fn swap_permutation(n: usize, a: usize, b: usize) -> impl Fn(usize) -> usize {
    move |idx| {
        if bit(idx, n, a) != bit(idx, n, b) {
            flip(flip(idx, n, a), n, b)
        } else {
            idx
        }
    }
}

pub fn gate_matrix(gate: &TargetGate) -> Result<Operator> {
    let n = gate.n_qubits;
    if n < 1 {
        return Err(Error::invalid("gate", "n_qubits must be >= 1"));
    }
    match &gate.kind {
        GateKind::Toffoli => {
            check_qubits(n, &[1, 2, 3])?;
            Ok(permutation_matrix(n, |idx| {
                if bit(idx, n, 1) == 1 && bit(idx, n, 2) == 1 {
                    flip(idx, n, 3)
                } else {
                    idx
                }
            }))
        }
        GateKind::Fredkin => {
            check_qubits(n, &[1, 2, 3])?;
            let swap = swap_permutation(n, 2, 3);
            Ok(permutation_matrix(n, |idx| {
                if bit(idx, n, 1) == 1 {
                    swap(idx)
                } else {
                    idx
                }
            }))
        }
        &GateKind::Cnot { control, target } => {
            check_qubits(n, &[control, target])?;
            Ok(permutation_matrix(n, |idx| {
                if bit(idx, n, control) == 1 {
                    flip(idx, n, target)
                } else {
                    idx
                }
            }))
        }
        &GateKind::Eswap { theta, qubits: (a, b) } => {
            check_qubits(n, &[a, b])?;
            if !theta.is_finite() {
                return Err(Error::invalid("gate", "eSWAP angle must be finite"));
            }
            let swap = permutation_matrix(n, swap_permutation(n, a, b));
            let dim = 1 << n;
            let (s, c) = theta.sin_cos();
            Ok(Operator::identity(dim, dim) * C64::from(c) + swap * C64::new(0.0, s))
        }
        GateKind::Custom { matrix } => {
            let dim = 1 << n;
            if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: matrix.len(),
                });
            }
            let mut m = Operator::from_element(dim, dim, ZERO);
            for (i, row) in matrix.iter().enumerate() {
                for (j, [re, im]) in row.iter().enumerate() {
                    m[(i, j)] = C64::new(*re, *im);
                }
            }
            let deviation = unitarity_deviation(&m);
            if !(deviation <= CUSTOM_UNITARITY_TOL) {
                return Err(Error::NotUnitary { deviation });
            }
            Ok(m)
        }
    }
}

/// How a schedule is mirrored when testing for palindromes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PalindromeConvention {
    /// Flattened slice list `x1 y1 x2 y2 ...`; slice k pairs with slice
    /// N_f + 1 - k (x amplitudes mirror onto y amplitudes).
    Flattened,
    /// Each axis mirrored on its own: `h_x[n] <-> h_x[N_f/2 + 1 - n]`, same for y.
    PerAxis,
}

pub fn is_palindromic(seq: &ControlSequence, tol: f64, convention: PalindromeConvention) -> bool {
    let m = seq.hx.len();
    match convention {
        PalindromeConvention::Flattened => {
            let flat = seq.flattened();
            let n = flat.len();
            (0..n / 2).all(|k| (flat[k] - flat[n - 1 - k]).abs() <= tol)
        }
        PalindromeConvention::PerAxis => (0..m).all(|k| {
            (seq.hx[k] - seq.hx[m - 1 - k]).abs() <= tol && (seq.hy[k] - seq.hy[m - 1 - k]).abs() <= tol
        }),
    }
}
