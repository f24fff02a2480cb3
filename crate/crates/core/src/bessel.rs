//! Bessel functions of the first kind, orders 0 and 1, for real argument.
//!
//! Three regimes: the power series for `|x| <= 8`, Miller's backward
//! recurrence up to `|x| < 25`, and the Hankel asymptotic expansion beyond.
//! Absolute accuracy is close to machine precision in all of them.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_MAX {
        series(0, ax)
    } else if ax < ASYMPTOTIC_MIN {
        miller(ax).0
    } else {
        hankel(0, ax)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_MAX {
        series(1, ax)
    } else if ax < ASYMPTOTIC_MIN {
        miller(ax).1
    } else {
        hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)`
fn series(order: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + order as usize) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Backward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` normalized with
/// `J_0 + 2 sum J_{2k} = 1`. Returns `(J_0, J_1)`.
fn miller(x: f64) -> (f64, f64) {
    let start = {
        let m = (x + 30.0 + (40.0 * x).sqrt()) as usize;
        m + (m & 1)
    };
    let mut above = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        // `current` now holds J_{k-1}
        if k - 1 == 1 {
            j1 = current;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += current;
    (current / norm, j1 / norm)
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > prev || term.abs() < 1e-18 {
            break;
        }
        prev = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let w = x - order as f64 * PI / 2.0 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`, trapezoid on the
    /// periodic integrand (spectrally accurate).
    fn integral_oracle(n: u32, x: f64) -> f64 {
        let m = 2000;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn matches_integral_representation_up_to_fifty() {
        let mut x = 0.0;
        while x <= 50.0 {
            let e0 = (j0(x) - integral_oracle(0, x)).abs();
            let e1 = (j1(x) - integral_oracle(1, x)).abs();
            assert!(e0 < 1e-12, "J0({x}) err {e0:e}");
            assert!(e1 < 1e-12, "J1({x}) err {e1:e}");
            x += 0.173;
        }
    }

    #[test]
    fn regimes_agree_at_their_boundaries() {
        for x in [SERIES_MAX - 0.5, SERIES_MAX] {
            let (m0, m1) = miller(x);
            assert!((series(0, x) - m0).abs() < 1e-13, "J0 series/miller at {x}: {:e}", series(0, x) - m0);
            assert!((series(1, x) - m1).abs() < 1e-13, "J1 series/miller at {x}");
        }
        let (m0, m1) = miller(ASYMPTOTIC_MIN);
        assert!((hankel(0, ASYMPTOTIC_MIN) - m0).abs() < 1e-14);
        assert!((hankel(1, ASYMPTOTIC_MIN) - m1).abs() < 1e-14);
    }

    #[test]
    fn known_values_and_symmetry() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        // first zero of J0
        assert!(j0(2.404_825_557_695_773).abs() < 1e-14);
        assert_eq!(j0(-3.3), j0(3.3));
        assert_eq!(j1(-3.3), -j1(3.3));
    }

    #[test]
    fn bounded_by_one() {
        for i in 0..5000 {
            let x = i as f64 * 0.1;
            assert!(j0(x).abs() <= 1.0);
        }
    }
}
