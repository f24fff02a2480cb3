//! Deterministic reductions and bootstrap error bars.

use std::ops::Add;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;

/// Resamples used for every bootstrap error bar.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Pairwise (cascade) summation with a fixed split, so the result does not
/// depend on how the caller's work was scheduled.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::default(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean<T>(xs: &[T]) -> T
where
    T: Copy + Default + Add<Output = T> + std::ops::Div<f64, Output = T>,
{
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (n - 1 normalization). Zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

/// Bootstrap replicates of a vector-valued statistic.
///
/// `stat` receives the resampled indices and returns the statistic. The
/// result holds one row per resample. Resample `r` draws its indices from
/// a ChaCha stream keyed by `(seed, r)`, so replicates are reproducible
/// and independent of scheduling.
pub fn bootstrap<F>(n: usize, resamples: usize, seed: u64, stat: F) -> Vec<Vec<f64>>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync + Send,
{
    exec::map_range(resamples, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64 + 1);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        stat(&idx)
    })
}

/// Column-wise standard deviation of bootstrap replicates.
pub fn replicate_std(reps: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = reps.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| {
            let col: Vec<f64> = reps.iter().map(|r| r[k]).collect();
            std_dev(&col)
        })
        .collect()
}

/// Standard deviation of an angle with period `period`, computed after
/// unwrapping each replicate to the branch nearest `center`.
pub fn circular_std(values: &[f64], center: f64, period: f64) -> f64 {
    let unwrapped: Vec<f64> = values
        .iter()
        .map(|&v| {
            let d = (v - center).rem_euclid(period);
            center + if d > period / 2.0 { d - period } else { d }
        })
        .collect();
    std_dev(&unwrapped)
}

/// A value with its one-sigma sampling error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Estimate { value, std_error }
    }

    /// Distance to `other` in units of the combined standard error.
    pub fn sigma_distance(&self, other: f64, other_err: f64) -> f64 {
        let s = (self.std_error.powi(2) + other_err.powi(2)).sqrt();
        let d = (self.value - other).abs();
        if s == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / s
        }
    }
}
