//! Collective spin moments from positive-P samples.
//!
//! With `J_+ = int psi_a^dag psi_b`, `J_- = J_+^dag` and `J_z = (N_a -
//! N_b)/2`, each sample yields c-numbers `j_x, j_y, j_z` by the
//! substitution `psi^dag -> psi_2`, `psi -> psi_1`. Normal ordering of the
//! products gives, for the symmetrized second moments,
//!
//! ```text
//! <(J_i J_j + J_j J_i)/2> = Re mean(j_i j_j) + delta_ij <N>/4
//! ```
//!
//! The `<N>/4` term is the only ordering correction.

use serde::{Deserialize, Serialize};

use crate::dynamics::TwoModeSample;
use crate::ensemble::{PPlusTrajectory, SpinSample};
use crate::error::{Error, Result};
use crate::stats::{self, Estimate, BOOTSTRAP_RESAMPLES};
use crate::C64;

/// Mean spin vector and symmetrized second moments, `x, y, z` order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    pub mean_atoms: f64,
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

/// Variances in the plane orthogonal to the mean spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transverse {
    pub min_variance: f64,
    pub max_variance: f64,
    /// Direction of minimum variance, measured from `e1` towards `e2`, in `[0, pi)`.
    pub angle: f64,
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot(&a, &a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

impl SpinState {
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.second[i][j] - self.mean[i] * self.mean[j]))
    }

    pub fn mean_length(&self) -> f64 {
        dot(&self.mean, &self.mean).sqrt()
    }

    /// Transverse plane basis: `e1` is the projection of `z` (of `x` when
    /// the mean spin is within ~25 degrees of the z axis), `e2 = n x e1`.
    pub fn transverse_basis(&self) -> ([f64; 3], [f64; 3]) {
        let len = self.mean_length();
        let n = if len > 0.0 {
            normalized(self.mean)
        } else {
            [0.0, 0.0, 1.0]
        };
        let reference = if n[2].abs() > 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let p = dot(&reference, &n);
        let e1 = normalized([
            reference[0] - p * n[0],
            reference[1] - p * n[1],
            reference[2] - p * n[2],
        ]);
        let e2 = cross(&n, &e1);
        (e1, e2)
    }

    /// Closed-form diagonalization of the 2x2 transverse covariance.
    pub fn transverse(&self) -> Transverse {
        let cov = self.covariance();
        let (e1, e2) = self.transverse_basis();
        let quad = |u: &[f64; 3], v: &[f64; 3]| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += u[i] * cov[i][j] * v[j];
                }
            }
            s
        };
        let (c11, c22, c12) = (quad(&e1, &e1), quad(&e2, &e2), quad(&e1, &e2));
        let mid = 0.5 * (c11 + c22);
        let rad = (0.25 * (c11 - c22).powi(2) + c12 * c12).sqrt();
        let major = 0.5 * (2.0 * c12).atan2(c11 - c22);
        let angle = (major + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
        Transverse {
            min_variance: mid - rad,
            max_variance: mid + rad,
            angle,
            e1,
            e2,
        }
    }

    /// Wineland parameter `N Var_min / |<J>|^2` with `N` supplied by the caller.
    pub fn squeezing(&self, atom_number: f64) -> Option<f64> {
        let l2 = dot(&self.mean, &self.mean);
        if l2 <= 1e-18 * atom_number * atom_number {
            return None;
        }
        Some(atom_number * self.transverse().min_variance / l2)
    }

    /// Mean and moments after the rotation `exp(-i theta J_y)` that
    /// implements the output-coupling pulse.
    pub fn rotated_about_y(&self, theta: f64) -> SpinState {
        let (c, s) = (theta.cos(), theta.sin());
        // (psi_a, psi_b) -> (cos psi_a + sin psi_b, -sin psi_a + cos psi_b)
        // maps J_x -> cos J_x + sin J_z ... as a vector: R = [[c,0,-s],[0,1,0],[s,0,c]]
        let r = [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]];
        let mean = std::array::from_fn(|i| (0..3).map(|k| r[i][k] * self.mean[k]).sum());
        let second = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        acc += r[i][k] * r[j][l] * self.second[k][l];
                    }
                }
                acc
            })
        });
        SpinState {
            mean_atoms: self.mean_atoms,
            mean,
            second,
        }
    }
}

/// Sampled spin moments with bootstrap standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpinMoments {
    pub n_samples: usize,
    pub state: SpinState,
    pub transverse: Transverse,
    pub mean_error: [f64; 3],
    pub second_error: [[f64; 3]; 3],
    pub min_variance_error: f64,
    pub angle_error: f64,
    /// Per-resample `(Var_min, |<J>|^2)`, kept for error propagation.
    #[serde(skip)]
    replicates: Vec<(f64, f64)>,
}

impl SpinMoments {
    pub fn mean(&self) -> [f64; 3] {
        self.state.mean
    }

    pub fn variance(&self, axis: usize) -> f64 {
        self.state.covariance()[axis][axis]
    }
}

fn component_samples(s: &SpinSample) -> [C64; 4] {
    let half = 0.5;
    let jx = (s.jp + s.jm) * half;
    let jy = (s.jp - s.jm) / C64::new(0.0, 2.0);
    let jz = (s.na - s.nb) * half;
    [jx, jy, jz, s.na + s.nb]
}

fn state_from(comp: &[[C64; 4]], idx: Option<&[usize]>) -> SpinState {
    let pick = |f: &dyn Fn(&[C64; 4]) -> f64| -> f64 {
        let v: Vec<f64> = match idx {
            Some(ix) => ix.iter().map(|&i| f(&comp[i])).collect(),
            None => comp.iter().map(f).collect(),
        };
        stats::mean(&v)
    };
    let mean_atoms = pick(&|c| c[3].re);
    let mean = std::array::from_fn(|i| pick(&|c| c[i].re));
    let mut second = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = pick(&|c| (c[i] * c[j]).re) + if i == j { 0.25 * mean_atoms } else { 0.0 };
            second[i][j] = v;
            second[j][i] = v;
        }
    }
    SpinState {
        mean_atoms,
        mean,
        second,
    }
}

/// Estimate spin moments from collective positive-P samples.
pub fn spin_moments_from_samples(samples: &[SpinSample], seed: u64) -> Result<SpinMoments> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let comp: Vec<[C64; 4]> = samples.iter().map(component_samples).collect();
    let state = state_from(&comp, None);
    let transverse = state.transverse();

    let reps = stats::bootstrap(comp.len(), BOOTSTRAP_RESAMPLES, seed, |idx| {
        let s = state_from(&comp, Some(idx));
        let t = s.transverse();
        let mut row = Vec::with_capacity(16);
        row.extend_from_slice(&s.mean);
        for i in 0..3 {
            row.extend_from_slice(&s.second[i]);
        }
        row.push(t.min_variance);
        row.push(t.angle);
        row.push(dot(&s.mean, &s.mean));
        row
    });
    let sd = stats::replicate_std(&reps);
    let angles: Vec<f64> = reps.iter().map(|r| r[13]).collect();
    Ok(SpinMoments {
        n_samples: samples.len(),
        state,
        transverse,
        mean_error: [sd[0], sd[1], sd[2]],
        second_error: std::array::from_fn(|i| std::array::from_fn(|j| sd[3 + 3 * i + j])),
        min_variance_error: sd[12],
        angle_error: stats::circular_std(&angles, transverse.angle, std::f64::consts::PI),
        replicates: reps.iter().map(|r| (r[12], r[14])).collect(),
    })
}

pub fn spin_moments(ensemble: &[PPlusTrajectory], grid: &crate::Grid1D, seed: u64) -> Result<SpinMoments> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let samples: Vec<SpinSample> = crate::exec::map_slice(ensemble, |_, t| t.spin_sample(grid));
    spin_moments_from_samples(&samples, seed)
}

pub fn two_mode_spin_moments(samples: &[TwoModeSample], seed: u64) -> Result<SpinMoments> {
    let s: Vec<SpinSample> = samples.iter().map(|x| x.spin_sample()).collect();
    spin_moments_from_samples(&s, seed)
}

/// Wineland squeezing `xi^2 = N Var_min / |<J>|^2` with bootstrap error.
pub fn squeezing_parameter(m: &SpinMoments, atom_number: f64) -> Result<Estimate> {
    let value = m
        .state
        .squeezing(atom_number)
        .ok_or_else(|| Error::Degenerate("mean spin vanishes; squeezing parameter undefined".into()))?;
    let reps: Vec<f64> = m
        .replicates
        .iter()
        .filter(|(_, l2)| *l2 > 0.0)
        .map(|(v, l2)| atom_number * v / l2)
        .collect();
    Ok(Estimate::new(value, stats::std_dev(&reps)))
}

/// Apply the rotation `(psi_ai, psi_bi) -> (cos(theta/2) psi_ai + sin(theta/2)
/// psi_bi, -sin(theta/2) psi_ai + cos(theta/2) psi_bi)` for `i = 1, 2`.
pub fn rotate_trajectory(t: &mut PPlusTrajectory, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    for (a, b) in t.a1.iter_mut().zip(t.b1.iter_mut()) {
        (*a, *b) = (*a * c + *b * s, *b * c - *a * s);
    }
    for (a, b) in t.a2.iter_mut().zip(t.b2.iter_mut()) {
        (*a, *b) = (*a * c + *b * s, *b * c - *a * s);
    }
}

pub fn rotate(mut ensemble: Vec<PPlusTrajectory>, theta: f64) -> Vec<PPlusTrajectory> {
    crate::exec::map_chunks_mut(&mut ensemble, 64, |_, chunk| {
        for t in chunk {
            rotate_trajectory(t, theta);
        }
    });
    ensemble
}

pub fn rotate_two_mode(s: &TwoModeSample, theta: f64) -> TwoModeSample {
    let (sn, c) = (0.5 * theta).sin_cos();
    TwoModeSample {
        a1: s.a1 * c + s.b1 * sn,
        b1: s.b1 * c - s.a1 * sn,
        a2: s.a2 * c + s.b2 * sn,
        b2: s.b2 * c - s.a2 * sn,
    }
}
