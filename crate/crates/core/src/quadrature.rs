//! Single-mode projection of the emitted field and homodyne quadrature
//! statistics.
//!
//! Conventions: `X_phi = (a e^{i phi} + a^dag e^{-i phi}) / sqrt 2`, so the
//! vacuum variance is `1/2`.

use std::f64::consts::PI;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::modes::ModeFunction;
use crate::raman::DetectorFieldPair;
use crate::stats::{self, BOOTSTRAP_RESAMPLES};
use crate::C64;

/// Number of quadrature angles sampled over `[0, pi)`.
pub const PHI_POINTS: usize = 180;

/// Default size of the scatter subsample.
pub const SCATTER_POINTS: usize = 6800;

/// One positive-P sample of the mode operators `(a, a^dag)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudePair {
    pub a1: C64,
    pub a2: C64,
}

impl ModeAmplitudePair {
    /// Homodyne coordinates `(Re (a1 + a2) / sqrt 2, Re i (a1 - a2) / sqrt 2)`.
    pub fn phase_space(&self) -> (f64, f64) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = ((self.a1 + self.a2) * s).re;
        let p = ((self.a1 - self.a2) * C64::new(0.0, s)).re;
        (x, p)
    }
}

/// `a1 = int conj(mode) E1 dtau`, `a2 = int mode E2 dtau`.
pub fn project(pair: &DetectorFieldPair, mode: &ModeFunction) -> Result<ModeAmplitudePair> {
    let n = mode.values.len();
    if pair.e1.len() != n || pair.e2.len() != n {
        return Err(Error::Grid(format!("field has {} samples, mode has {n}", pair.e1.len())));
    }
    let w = &mode.tau.weights;
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    for k in 0..n {
        a1 += mode.values[k].conj() * pair.e1[k] * w[k];
        a2 += mode.values[k] * pair.e2[k] * w[k];
    }
    Ok(ModeAmplitudePair { a1, a2 })
}

pub fn project_all(fields: &[DetectorFieldPair], mode: &ModeFunction) -> Result<Vec<ModeAmplitudePair>> {
    exec::map_slice(fields, |_, f| project(f, mode)).into_iter().collect()
}

/// Normal-ordered moments of one set of samples.
///
/// `a1` samples `a` and `a2` samples `a^dag`, so `<a>` and `<a^2>` each
/// have two unbiased estimators, from `a1` and from the conjugate of `a2`.
/// Their average is used: it treats the copies symmetrically, like the
/// quadrature sample `(a1 e^{i phi} + a2 e^{-i phi}) / sqrt 2`, and its
/// sampling error is several times smaller than that of either copy alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalMoments {
    /// `<a>`
    pub mean: C64,
    /// `<a^dag a>`
    pub number: f64,
    /// `<a^2>`
    pub square: C64,
}

impl NormalMoments {
    pub fn of(amps: &[ModeAmplitudePair], idx: Option<&[usize]>) -> Self {
        let pick = |f: &dyn Fn(&ModeAmplitudePair) -> C64| -> C64 {
            let v: Vec<C64> = match idx {
                Some(ix) => ix.iter().map(|&i| f(&amps[i])).collect(),
                None => amps.iter().map(f).collect(),
            };
            stats::mean(&v)
        };
        NormalMoments {
            mean: pick(&|a| 0.5 * (a.a1 + a.a2.conj())),
            number: pick(&|a| a.a2 * a.a1).re,
            square: pick(&|a| 0.5 * (a.a1 * a.a1 + (a.a2 * a.a2).conj())),
        }
    }

    /// `<a^dag a> - |<a>|^2`
    pub fn excess(&self) -> f64 {
        self.number - self.mean.norm_sqr()
    }

    /// `<a^2> - <a>^2`
    pub fn anomalous(&self) -> C64 {
        self.square - self.mean * self.mean
    }

    pub fn variance(&self, phi: f64) -> f64 {
        0.5 + self.excess() + (C64::from_polar(1.0, 2.0 * phi) * self.anomalous()).re
    }

    /// `(minimum variance, optimal angle in [0, pi))`.
    pub fn minimum(&self) -> (f64, f64) {
        let m = self.anomalous();
        let phi = if m.norm() > 0.0 { (PI - m.arg()) / 2.0 } else { 0.0 };
        (0.5 + self.excess() - m.norm(), phi.rem_euclid(PI))
    }

    pub fn maximum(&self) -> f64 {
        0.5 + self.excess() + self.anomalous().norm()
    }
}

/// Quadrature statistics with bootstrap standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSummary {
    pub n_samples: usize,
    pub moments: NormalMoments,
    pub mean_error: f64,
    pub number_error: f64,
    pub phi: Vec<f64>,
    pub variance: Vec<f64>,
    pub variance_error: Vec<f64>,
    pub min_variance: f64,
    pub min_variance_error: f64,
    pub optimal_phi: f64,
    pub optimal_phi_error: f64,
    pub max_variance: f64,
    pub max_variance_error: f64,
}

impl QuadratureSummary {
    /// `Var(X_phi*) Var(X_phi* + pi/2)`, bounded below by 1/4.
    pub fn uncertainty_product(&self) -> f64 {
        self.min_variance * self.max_variance
    }

    /// Squeezing relative to vacuum, `0.5 / Var_min`.
    pub fn squeezing_factor(&self) -> f64 {
        0.5 / self.min_variance
    }
}

pub fn moments(amps: &[ModeAmplitudePair], seed: u64) -> Result<QuadratureSummary> {
    if amps.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: amps.len() });
    }
    let phi: Vec<f64> = (0..PHI_POINTS).map(|k| PI * k as f64 / PHI_POINTS as f64).collect();
    let row = |m: &NormalMoments| -> Vec<f64> {
        let (vmin, phi_opt) = m.minimum();
        let mut r = vec![m.mean.norm(), m.number, vmin, phi_opt, m.maximum()];
        r.extend(phi.iter().map(|&p| m.variance(p)));
        r
    };
    let m = NormalMoments::of(amps, None);
    let reps = stats::bootstrap(amps.len(), BOOTSTRAP_RESAMPLES, seed, |idx| row(&NormalMoments::of(amps, Some(idx))));
    let sd = stats::replicate_std(&reps);
    let (min_variance, optimal_phi) = m.minimum();
    let angles: Vec<f64> = reps.iter().map(|r| r[3]).collect();
    Ok(QuadratureSummary {
        n_samples: amps.len(),
        moments: m,
        mean_error: sd[0],
        number_error: sd[1],
        variance: phi.iter().map(|&p| m.variance(p)).collect(),
        variance_error: sd[5..].to_vec(),
        phi,
        min_variance,
        min_variance_error: sd[2],
        optimal_phi,
        optimal_phi_error: stats::circular_std(&angles, optimal_phi, PI),
        max_variance: m.maximum(),
        max_variance_error: sd[4],
    })
}

/// Binning of the homodyne coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins_x: usize,
    pub bins_p: usize,
    /// Half-width of each axis in standard deviations of its marginal.
    pub half_width_sigmas: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bins_x: 101,
            bins_p: 101,
            half_width_sigmas: 4.0,
        }
    }
}

/// 2D counts; `counts[ix * bins_p + ip]`. Samples outside the range are
/// added to the nearest edge bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub x_edges: Vec<f64>,
    pub p_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bins_p(&self) -> usize {
        self.p_edges.len() - 1
    }
}

fn axis(values: &[f64], bins: usize, sigmas: f64) -> Vec<f64> {
    let m = stats::mean(values);
    let sd = stats::std_dev(values);
    let half = if sd > 0.0 && sd.is_finite() { sigmas * sd } else { 1.0 };
    (0..=bins).map(|k| m - half + 2.0 * half * k as f64 / bins as f64).collect()
}

fn bin_of(v: f64, edges: &[f64]) -> usize {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    if !(v > lo) {
        return 0;
    }
    let k = ((v - lo) / (hi - lo) * bins as f64) as usize;
    k.min(bins - 1)
}

pub fn histogram(amps: &[ModeAmplitudePair], spec: HistogramSpec) -> Result<Histogram> {
    if spec.bins_x == 0 || spec.bins_p == 0 || !(spec.half_width_sigmas > 0.0) {
        return Err(Error::Numerical(format!("invalid histogram spec {spec:?}")));
    }
    if amps.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let (xs, ps): (Vec<f64>, Vec<f64>) = amps.iter().map(|a| a.phase_space()).unzip();
    let x_edges = axis(&xs, spec.bins_x, spec.half_width_sigmas);
    let p_edges = axis(&ps, spec.bins_p, spec.half_width_sigmas);
    let mut counts = vec![0u64; spec.bins_x * spec.bins_p];
    for (x, p) in xs.iter().zip(&ps) {
        counts[bin_of(*x, &x_edges) * spec.bins_p + bin_of(*p, &p_edges)] += 1;
    }
    Ok(Histogram {
        x_edges,
        p_edges,
        counts,
    })
}

/// Reproducible subsample of at most `size` homodyne points, kept in
/// ensemble order.
pub fn scatter(amps: &[ModeAmplitudePair], size: usize, seed: u64) -> Vec<(f64, f64)> {
    if amps.len() <= size {
        return amps.iter().map(|a| a.phase_space()).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, amps.len(), size).into_vec();
    picks.sort_unstable();
    picks.iter().map(|&i| amps[i].phase_space()).collect()
}
