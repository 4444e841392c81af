//! Independent reference implementations used by the integration tests.
//! None of these call into the library's numerics.

#![allow(dead_code)]

use chaingate::linalg::C64;
use chaingate::propagation::ControlSequence;
use chaingate::Operator;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sequence(rng: &mut ChaCha8Rng, n_pulses: usize, slice: f64, a_max: f64) -> ControlSequence {
    let amps: Vec<f64> = (0..n_pulses).map(|_| rng.random_range(-a_max..=a_max)).collect();
    ControlSequence::from_flattened(slice, &amps).unwrap()
}

fn one_norm(a: &Operator) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring of a truncated Taylor series.
pub fn taylor_expm(a: &Operator) -> Operator {
    let n = a.nrows();
    let mut squarings = 0;
    let mut scale = 1.0;
    while one_norm(a) * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * C64::from(scale);
    let mut term = Operator::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &x * C64::from(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i h t)` through [`taylor_expm`].
pub fn taylor_evolution(h: &Operator, t: f64) -> Operator {
    taylor_expm(&(h * C64::new(0.0, -t)))
}

/// Integrates `dU/dt = -i H(t) U` slice by slice with classical RK4.
pub fn rk4_propagate(drift: &Operator, cx: &Operator, cy: &Operator, seq: &ControlSequence, steps_per_slice: usize) -> Operator {
    let n = drift.nrows();
    let mut u = Operator::identity(n, n);
    let h = seq.slice_duration / steps_per_slice as f64;
    for (k, amp) in seq.flattened().into_iter().enumerate() {
        let ctrl = if k % 2 == 0 { cx } else { cy };
        let gen = (drift + ctrl * C64::from(amp)) * C64::new(0.0, -1.0);
        for _ in 0..steps_per_slice {
            let k1 = &gen * &u;
            let k2 = &gen * (&u + &k1 * C64::from(h / 2.0));
            let k3 = &gen * (&u + &k2 * C64::from(h / 2.0));
            let k4 = &gen * (&u + &k3 * C64::from(h));
            u += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
        }
    }
    u
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Real embedding `[[Re, -Im], [Im, Re]]` of a Hermitian matrix; its spectrum
/// is the original one with every eigenvalue doubled.
pub fn real_embedding(h: &Operator) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// `Si(x) = int_0^x sin(s)/s ds` by direct quadrature.
pub fn si_quadrature(x: f64) -> f64 {
    let rule = gauss_legendre(20);
    let sinc = |s: f64| if s == 0.0 { 1.0 } else { s.sin() / s };
    integrate(sinc, 0.0, x, (x.abs().ceil() as usize).max(1) * 4, &rule)
}

/// Ideal low-pass field at time `t`, computed as the inverse transform over
/// `|w| <= cutoff` of the exact Fourier transform of the PWC schedule.
/// The box `[t0, t1]` contributes `(1/pi) int_0^w0 [sin(w(t-t0)) - sin(w(t-t1))]/w dw`.
pub fn spectral_fields(seq: &ControlSequence, cutoff: f64, t: f64, rule: &[(f64, f64)], panels: usize) -> (f64, f64) {
    let dt = seq.slice_duration;
    let mut hx = 0.0;
    let mut hy = 0.0;
    for (k, amp) in seq.flattened().into_iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let kernel = |w: f64| {
            if w == 0.0 {
                t1 - t0
            } else {
                ((w * (t - t0)).sin() - (w * (t - t1)).sin()) / w
            }
        };
        let v = amp * integrate(kernel, 0.0, cutoff, panels, rule) / std::f64::consts::PI;
        if k % 2 == 0 {
            hx += v;
        } else {
            hy += v;
        }
    }
    (hx, hy)
}

/// Real coordinates of a skew-Hermitian matrix `A = i sum_P c_P P` in the
/// traceless Pauli basis; the identity component is dropped.
fn pauli_coordinates(a: &Operator) -> Vec<f64> {
    let dim = a.nrows();
    let n = dim.trailing_zeros() as usize;
    let o = C64::from(0.0);
    let l = C64::from(1.0);
    let i = C64::new(0.0, 1.0);
    let paulis = [
        Operator::identity(2, 2),
        Operator::from_row_slice(2, 2, &[o, l, l, o]),
        Operator::from_row_slice(2, 2, &[o, -i, i, o]),
        Operator::from_row_slice(2, 2, &[l, o, o, -l]),
    ];
    (1..1usize << (2 * n))
        .map(|code| {
            let mut p = Operator::identity(1, 1);
            for q in (0..n).rev() {
                p = p.kronecker(&paulis[(code >> (2 * q)) & 3]);
            }
            ((&p * a).trace() / (i * dim as f64)).re
        })
        .collect()
}

/// Rank of a list of skew-Hermitian matrices, from singular values of their
/// Pauli coordinates.
pub fn real_rank(ops: &[Operator], tol: f64) -> usize {
    if ops.is_empty() {
        return 0;
    }
    let cols: Vec<Vec<f64>> = ops.iter().map(pauli_coordinates).collect();
    let m = DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

/// Dimension of the real Lie algebra generated by `{-i H_k}`: all nested
/// commutators are collected level by level until the rank stops growing.
pub fn lie_closure_rank(hamiltonians: &[Operator]) -> usize {
    let gens: Vec<Operator> = hamiltonians.iter().map(|h| h * C64::new(0.0, -1.0)).collect();
    let mut basis: Vec<Operator> = Vec::new();
    let mut rank = 0;
    for g in &gens {
        let mut trial = basis.clone();
        trial.push(g.clone());
        let r = real_rank(&trial, 1e-9);
        if r > rank {
            basis = trial;
            rank = r;
        }
    }
    let mut frontier = basis.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for a in &gens {
            for b in &frontier {
                let c = a * b - b * a;
                let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-8 {
                    continue;
                }
                let c = c * C64::from(1.0 / norm);
                let mut trial = basis.clone();
                trial.push(c.clone());
                let r = real_rank(&trial, 1e-9);
                if r > rank {
                    basis = trial;
                    rank = r;
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    rank
}

/// Drift and controls written out directly from Pauli matrices.
pub fn reference_operators(n: usize, j: [f64; 3], omega: f64, weights: &[f64]) -> (Operator, Operator, Operator) {
    let o = C64::from(0.0);
    let l = C64::from(1.0);
    let i = C64::new(0.0, 1.0);
    let id = Operator::identity(2, 2);
    let x = Operator::from_row_slice(2, 2, &[o, l, l, o]);
    let y = Operator::from_row_slice(2, 2, &[o, -i, i, o]);
    let z = Operator::from_row_slice(2, 2, &[l, o, o, -l]);
    let site = |ops: &[(usize, &Operator)]| {
        let mut m = Operator::identity(1, 1);
        for q in 0..n {
            let f = ops.iter().find(|(p, _)| *p == q).map(|(_, a)| *a).unwrap_or(&id);
            m = m.kronecker(f);
        }
        m
    };
    let dim = 1 << n;
    let mut h = Operator::zeros(dim, dim);
    for q in 0..n - 1 {
        h += site(&[(q, &x), (q + 1, &x)]) * C64::from(j[0] / 4.0);
        h += site(&[(q, &y), (q + 1, &y)]) * C64::from(j[1] / 4.0);
        h += site(&[(q, &z), (q + 1, &z)]) * C64::from(j[2] / 4.0);
    }
    for q in 0..n {
        h -= site(&[(q, &z)]) * C64::from(omega / 2.0);
    }
    let mut cx = Operator::zeros(dim, dim);
    let mut cy = Operator::zeros(dim, dim);
    for q in 0..n {
        cx += site(&[(q, &x)]) * C64::from(weights[q] / 2.0);
        cy += site(&[(q, &y)]) * C64::from(weights[q] / 2.0);
    }
    (h, cx, cy)
}

pub fn max_diff(a: &Operator, b: &Operator) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn unitarity_error(u: &Operator) -> f64 {
    let n = u.nrows();
    max_diff(&(u.adjoint() * u), &Operator::identity(n, n))
}

/// `|Tr(U^dagger G)| / d`.
pub fn overlap_fidelity(u: &Operator, g: &Operator) -> f64 {
    (u.adjoint() * g).trace().norm() / u.nrows() as f64
}

/// Toffoli and Fredkin as permutation matrices (qubit 1 most significant).
pub fn permutation_gate(n: usize, map: impl Fn(usize) -> usize) -> Operator {
    let dim = 1 << n;
    let mut m = Operator::zeros(dim, dim);
    for col in 0..dim {
        m[(map(col), col)] = C64::from(1.0);
    }
    m
}

pub fn toffoli_reference() -> Operator {
    permutation_gate(3, |b| if b & 0b110 == 0b110 { b ^ 1 } else { b })
}

pub fn fredkin_reference() -> Operator {
    permutation_gate(3, |b| if b & 0b100 != 0 { (b & 0b100) | ((b & 1) << 1) | ((b >> 1) & 1) } else { b })
}
