//! Sine integral `Si(x) = int_0^x sin(t)/t dt`.

use std::f64::consts::FRAC_PI_2;

use crate::linalg::C64;

/// Power series below this `|x|`, continued fraction above.
const SERIES_LIMIT: f64 = 4.0;

/// Sine integral, accurate to about 1e-15 absolute for all finite `x`.
pub fn si(x: f64) -> f64 {
    let t = x.abs();
    let value = if t <= SERIES_LIMIT { series(t) } else { continued_fraction(t) };
    value.copysign(x)
}

/// `sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)`.
fn series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..60 {
        let n = (2 * k) as f64;
        term *= -x2 / (n * (n + 1.0));
        let contribution = term / (n + 1.0);
        sum += contribution;
        if contribution.abs() <= f64::EPSILON * sum.abs() * 0.1 {
            break;
        }
    }
    sum
}

/// Reads `Si` off `E_1(ix) = -Ci(x) + i (Si(x) - pi/2)`, whose continued
/// fraction is evaluated with the modified Lentz method.
fn continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = C64::new(1.0, x);
    let mut c = C64::new(1.0 / TINY, 0.0);
    let mut d = C64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..200 {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += C64::new(2.0, 0.0);
        d = C64::new(1.0, 0.0) / (d * a + b);
        c = b + C64::new(a, 0.0) / c;
        let delta = c * d;
        h *= delta;
        if (delta.re - 1.0).abs() + delta.im.abs() < f64::EPSILON {
            break;
        }
    }
    h *= C64::new(x.cos(), -x.sin());
    FRAC_PI_2 + h.im
}

/// `int_0^u Si(s) ds = u Si(u) + cos(u) - 1`.
pub fn si_antiderivative(u: f64) -> f64 {
    u * si(u) + u.cos() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_odd() {
        assert_eq!(si(0.0), 0.0);
        for &x in &[0.3, 3.9, 4.0, 4.1, 17.0, 250.0] {
            assert_eq!(si(-x), -si(x));
        }
    }

    #[test]
    fn series_and_fraction_agree_at_the_switch() {
        for &x in &[3.0, 3.5, 4.0, 4.5, 5.0] {
            assert!((series(x) - continued_fraction(x)).abs() < 2e-15, "x = {x}");
        }
    }

    #[test]
    fn tends_to_half_pi() {
        assert!((si(1e8) - FRAC_PI_2).abs() < 2e-8);
        assert!((si(1e12) - FRAC_PI_2).abs() < 1e-12);
    }
}
