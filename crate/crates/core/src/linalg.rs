//! Dense complex matrix helpers shared by the operator builders and propagators.

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

/// Dense complex operator on the chain Hilbert space.
pub type Operator = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Single-qubit Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Operator {
        match self {
            Pauli::I => Operator::identity(2, 2),
            Pauli::X => Operator::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => Operator::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => Operator::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Pauli string with `p` on each listed 0-based site and identity elsewhere.
/// Site 0 is the most significant tensor factor.
pub fn pauli_string(n_qubits: usize, ops: &[(usize, Pauli)]) -> Operator {
    let mut out = Operator::identity(1, 1);
    for site in 0..n_qubits {
        let p = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, p)| *p)
            .unwrap_or(Pauli::I);
        out = kron(&out, &p.matrix());
    }
    out
}

/// Largest entrywise deviation of `a` from `a^dagger`.
pub fn hermiticity_deviation(a: &Operator) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// Largest entrywise deviation of `u^dagger u` from the identity.
pub fn unitarity_deviation(u: &Operator) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &Operator::identity(n, n))
}

pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: &Operator, b: &Operator) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
