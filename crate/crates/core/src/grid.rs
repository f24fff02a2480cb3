use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::pairwise_sum;
use crate::C64;

/// Uniform 1D grid with trapezoid quadrature weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub step: f64,
}

impl Grid1D {
    fn from_points(points: Vec<f64>, step: f64) -> Self {
        let n = points.len();
        let mut weights = vec![step; n];
        if n > 1 {
            weights[0] = 0.5 * step;
            weights[n - 1] = 0.5 * step;
        }
        Grid1D {
            points,
            weights,
            step,
        }
    }

    /// FFT-ordered spatial grid `x_k = (k - n/2) dx`, so `x_{n/2} = 0` and
    /// `x_{n-k} = -x_k`.
    pub fn centered(n: usize, dx: f64) -> Self {
        let half = (n / 2) as f64;
        Self::from_points((0..n).map(|k| (k as f64 - half) * dx).collect(), dx)
    }

    /// Grid `t_k = k dt` starting at zero.
    pub fn from_origin(n: usize, dt: f64) -> Self {
        Self::from_points((0..n).map(|k| k as f64 * dt).collect(), dt)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance between first and last point.
    pub fn extent(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        let terms: Vec<f64> = f.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        pairwise_sum(&terms)
    }

    pub fn integrate_c(&self, f: &[C64]) -> C64 {
        let terms: Vec<C64> = f.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        pairwise_sum(&terms)
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.len();
        let dk = 2.0 * PI / (n as f64 * self.step);
        (0..n)
            .map(|j| {
                let j = j as i64;
                let m = if j < (n as i64 + 1) / 2 { j } else { j - n as i64 };
                m as f64 * dk
            })
            .collect()
    }

    /// Grid with `factor` times as many points over the same periodic cell.
    pub fn refined(&self, factor: usize) -> Self {
        let n = self.len() * factor;
        let dx = self.step / factor as f64;
        let x0 = self.points[0];
        Self::from_points((0..n).map(|k| x0 + k as f64 * dx).collect(), dx)
    }

    pub fn check_same(&self, other: &Grid1D, what: &str) -> Result<()> {
        if self.len() != other.len() || (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::Grid(format!(
                "{what}: {} points of {} vs {} points of {}",
                self.len(),
                self.step,
                other.len(),
                other.step
            )));
        }
        Ok(())
    }
}

/// Band-limited interpolation of periodic samples onto a grid `factor`
/// times finer, by zero-padding the spectrum. The Nyquist bin of an even
/// length input is split evenly between the two halves.
pub fn fourier_refine(values: &[C64], factor: usize) -> Vec<C64> {
    let n = values.len();
    if factor == 1 || n == 0 {
        return values.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    if n % 2 == 0 {
        padded[..half].copy_from_slice(&spec[..half]);
        for j in half + 1..n {
            padded[m - n + j] = spec[j];
        }
        padded[half] = spec[half] * 0.5;
        padded[m - half] = spec[half] * 0.5;
    } else {
        padded[..=half].copy_from_slice(&spec[..=half]);
        for j in half + 1..n {
            padded[m - n + j] = spec[j];
        }
    }
    planner.plan_fft_inverse(m).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter().map(|v| v * scale).collect()
}

/// Running integral `F(x) = int_{x_0}^x f` of the band-limited interpolant
/// of periodic samples `values` (spacing `step`), evaluated on the grid
/// `factor` times finer. Exact for band-limited input, unlike a trapezoid
/// on the fine grid. The Nyquist bin is dropped. The integral over the
/// whole period is `step * sum(values)`.
pub fn spectral_antiderivative_complex(values: &[C64], step: f64, factor: usize) -> Vec<C64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mean = spec[0] / n as f64;
    let period = n as f64 * step;
    for (j, v) in spec.iter_mut().enumerate() {
        let m = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
        if m == 0 || (n % 2 == 0 && j == n / 2) {
            *v = C64::new(0.0, 0.0);
        } else {
            let k = 2.0 * std::f64::consts::PI * m as f64 / period;
            *v /= C64::new(0.0, k * n as f64);
        }
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let periodic = fourier_refine(&spec, factor);
    let h = step / factor as f64;
    let p0 = periodic[0];
    periodic
        .iter()
        .enumerate()
        .map(|(i, p)| mean * (h * i as f64) + p - p0)
        .collect()
}

/// Real-valued [`spectral_antiderivative_complex`].
pub fn spectral_antiderivative(values: &[f64], step: f64, factor: usize) -> Vec<f64> {
    let c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    spectral_antiderivative_complex(&c, step, factor).iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_extent() {
        let g = Grid1D::centered(64, 0.1);
        assert!((g.weights.iter().sum::<f64>() - g.extent()).abs() < 1e-12);
        assert!(g.points.windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights.iter().all(|&w| w > 0.0));
        let t = Grid1D::from_origin(11, 0.5);
        assert_eq!(t.points[0], 0.0);
        assert!((t.extent() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn centered_grid_is_mirror_symmetric() {
        let g = Grid1D::centered(32, 0.25);
        assert_eq!(g.points[16], 0.0);
        for k in 1..32 {
            assert_eq!(g.points[32 - k], -g.points[k]);
        }
    }

    #[test]
    fn trapezoid_integrates_gaussian() {
        let g = Grid1D::centered(256, 0.05);
        let f: Vec<f64> = g.points.iter().map(|z| (-z * z).exp()).collect();
        assert!((g.integrate(&f) - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fourier_refine_is_exact_for_band_limited_input() {
        let g = Grid1D::centered(32, 0.2);
        let len = 32.0 * 0.2;
        let k = 2.0 * PI / len;
        let f = |x: f64| C64::new((3.0 * k * x).cos(), (5.0 * k * x).sin());
        let coarse: Vec<C64> = g.points.iter().map(|&x| f(x)).collect();
        let fine = fourier_refine(&coarse, 4);
        let gf = g.refined(4);
        for (x, v) in gf.points.iter().zip(&fine) {
            assert!((f(*x) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_antiderivative_of_band_limited_profile() {
        let n = 32;
        let step = 0.25;
        let period = n as f64 * step;
        let k = 2.0 * std::f64::consts::PI / period;
        let f = |x: f64| 1.5 + (3.0 * k * x).cos() - 0.4 * (k * x).sin();
        let big_f = |x: f64| 1.5 * x + (3.0 * k * x).sin() / (3.0 * k) + 0.4 * ((k * x).cos() - 1.0) / k;
        let samples: Vec<f64> = (0..n).map(|j| f(j as f64 * step)).collect();
        let out = spectral_antiderivative(&samples, step, 4);
        assert_eq!(out.len(), 4 * n);
        for (i, v) in out.iter().enumerate() {
            let x = i as f64 * step / 4.0;
            assert!((v - big_f(x)).abs() < 1e-12, "{i}: {v} vs {}", big_f(x));
        }
    }
}
