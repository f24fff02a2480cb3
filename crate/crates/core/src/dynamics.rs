//! Ito positive-P equations for the two-component condensate.
//!
//! For `H = sum_i psi_i^dag h psi_i + g_ii/2 psi_i^dag^2 psi_i^2 + g_ab
//! psi_a^dag psi_b^dag psi_b psi_a` the "1" fields obey
//!
//! ```text
//! d psi_a1 = -i [h + g_aa psi_a2 psi_a1 + g_ab psi_b2 psi_b1] psi_a1 dt + (B1 dW)_a
//! ```
//!
//! and the "2" fields the same with `+i` and independent noise. Per grid
//! point the diffusion block of the "1" fields is `D = -i diag(psi1) G
//! diag(psi1)` with `G` the interaction matrix, so `B1 = sqrt(-i)
//! diag(psi1) C` for any complex `C` with `C C^T = G`. The choice of `C`
//! is the [`NoiseFactorization`]; ensemble means do not depend on it.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::ensemble::{trajectory_seed, PPlusTrajectory, SpinSample};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::Grid1D;
use crate::C64;

/// Pivot magnitude below which the Cholesky order is swapped.
const PIVOT_EPS: f64 = 1e-30;
/// Trajectories whose `|psi|^2` exceeds `DIVERGENCE_CAP * N` are dropped.
pub const DIVERGENCE_CAP: f64 = 1e6;
/// Largest tolerated fraction of dropped trajectories.
pub const MAX_DISCARD_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFactorization {
    /// Lower-triangular, `a` pivot first.
    Cholesky,
    /// Upper-triangular, `b` pivot first.
    ReversedCholesky,
    /// Symmetric square root of `G`.
    SymmetricRoot,
}

impl fmt::Display for NoiseFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFactorization::Cholesky => "cholesky",
            NoiseFactorization::ReversedCholesky => "cholesky-reversed",
            NoiseFactorization::SymmetricRoot => "symmetric",
        })
    }
}

impl FromStr for NoiseFactorization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cholesky" => Ok(NoiseFactorization::Cholesky),
            "cholesky-reversed" => Ok(NoiseFactorization::ReversedCholesky),
            "symmetric" => Ok(NoiseFactorization::SymmetricRoot),
            other => Err(format!(
                "unknown noise factorization `{other}` (cholesky, cholesky-reversed, symmetric)"
            )),
        }
    }
}

/// Symmetric interaction matrix `[[g_aa, g_ab], [g_ab, g_bb]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interaction {
    pub g_aa: f64,
    pub g_ab: f64,
    pub g_bb: f64,
}

impl Interaction {
    pub fn from_config(cfg: &SimulationConfig) -> Self {
        Interaction {
            g_aa: cfg.g_aa,
            g_ab: cfg.g_ab,
            g_bb: cfg.g_bb,
        }
    }

    /// Effective one-axis-twisting strength `(g_aa + g_bb)/2 - g_ab` per
    /// unit overlap integral.
    pub fn twisting(&self) -> f64 {
        0.5 * (self.g_aa + self.g_bb) - self.g_ab
    }

    /// Complex `C` with `C C^T = G` (plain transpose).
    pub fn noise_factor(&self, kind: NoiseFactorization) -> [[C64; 2]; 2] {
        let c = |x: f64| C64::new(x, 0.0);
        let zero = c(0.0);
        let (gaa, gab, gbb) = (c(self.g_aa), c(self.g_ab), c(self.g_bb));
        let lower = || {
            let c11 = gaa.sqrt();
            let c21 = gab / c11;
            [[c11, zero], [c21, (gbb - c21 * c21).sqrt()]]
        };
        let upper = || {
            let c22 = gbb.sqrt();
            let c12 = gab / c22;
            [[(gaa - c12 * c12).sqrt(), c12], [zero, c22]]
        };
        let off_diagonal = || {
            // [[0, g], [g, 0]] = C C^T with C = sqrt(g/2) [[1, i], [1, -i]]
            let s = (gab * 0.5).sqrt();
            let i = C64::i();
            [[s, s * i], [s, -s * i]]
        };
        let a_ok = self.g_aa.abs() > PIVOT_EPS;
        let b_ok = self.g_bb.abs() > PIVOT_EPS;
        match kind {
            NoiseFactorization::Cholesky | NoiseFactorization::ReversedCholesky
                if !a_ok && !b_ok =>
            {
                if self.g_ab.abs() > PIVOT_EPS {
                    off_diagonal()
                } else {
                    [[zero, zero], [zero, zero]]
                }
            }
            NoiseFactorization::Cholesky => {
                if a_ok {
                    lower()
                } else {
                    upper()
                }
            }
            NoiseFactorization::ReversedCholesky => {
                if b_ok {
                    upper()
                } else {
                    lower()
                }
            }
            NoiseFactorization::SymmetricRoot => {
                // G = R diag(l) R^T with R a rotation; C = R diag(sqrt l) R^T
                let half_tr = 0.5 * (self.g_aa + self.g_bb);
                let disc = (0.25 * (self.g_aa - self.g_bb).powi(2) + self.g_ab * self.g_ab).sqrt();
                let (l1, l2) = (half_tr + disc, half_tr - disc);
                let angle = 0.5 * (2.0 * self.g_ab).atan2(self.g_aa - self.g_bb);
                let (cs, sn) = (angle.cos(), angle.sin());
                let (s1, s2) = (c(l1).sqrt(), c(l2).sqrt());
                [
                    [s1 * cs * cs + s2 * sn * sn, (s1 - s2) * cs * sn],
                    [(s1 - s2) * cs * sn, s1 * sn * sn + s2 * cs * cs],
                ]
            }
        }
    }
}

/// Everything the stochastic equations need besides the fields.
#[derive(Clone, Debug)]
pub struct DriftDiffusionSpec {
    pub interaction: Interaction,
    /// Include `h = -1/2 d^2/dz^2 + z^2/2` (common to both components).
    pub single_particle: bool,
    pub factorization: NoiseFactorization,
    /// Switch the Ito noise off (mean-field evolution).
    pub noise: bool,
    factor: [[C64; 2]; 2],
}

impl DriftDiffusionSpec {
    pub fn new(interaction: Interaction, factorization: NoiseFactorization) -> Self {
        DriftDiffusionSpec {
            interaction,
            single_particle: true,
            factorization,
            noise: true,
            factor: interaction.noise_factor(factorization),
        }
    }

    pub fn from_config(cfg: &SimulationConfig) -> Self {
        Self::new(Interaction::from_config(cfg), cfg.factorization)
    }

    pub fn without_noise(mut self) -> Self {
        self.noise = false;
        self
    }

    pub fn without_single_particle(mut self) -> Self {
        self.single_particle = false;
        self
    }

    pub fn noise_factor(&self) -> [[C64; 2]; 2] {
        self.factor
    }

    /// Per-point diffusion block of the "1" fields,
    /// `-i [[g_aa a1^2, g_ab a1 b1], [g_ab a1 b1, g_bb b1^2]]`.
    pub fn diffusion_block(&self, a1: C64, b1: C64) -> [[C64; 2]; 2] {
        let g = self.interaction;
        let mi = -C64::i();
        [
            [mi * g.g_aa * a1 * a1, mi * g.g_ab * a1 * b1],
            [mi * g.g_ab * a1 * b1, mi * g.g_bb * b1 * b1],
        ]
    }

    /// Point-wise exponential kick: interaction (plus external potential
    /// `v`) and Ito noise. `xi` holds four independent normals already
    /// scaled to variance `dt/dz`; `dt_over_dz` enters the Ito correction.
    #[inline]
    fn kick(&self, f: [&mut C64; 4], v: f64, dt: f64, dt_over_dz: f64, xi: [f64; 4]) {
        let g = &self.interaction;
        let [a1, a2, b1, b2] = f;
        let na = *a2 * *a1;
        let nb = *b2 * *b1;
        let va = na * g.g_aa + nb * g.g_ab + v;
        let vb = na * g.g_ab + nb * g.g_bb + v;
        let i = C64::i();
        let mut ea1 = -i * va * dt;
        let mut ea2 = i * va * dt;
        let mut eb1 = -i * vb * dt;
        let mut eb2 = i * vb * dt;
        if self.noise {
            let c = &self.factor;
            let sm = C64::from_polar(1.0, -FRAC_PI_4);
            let sp = C64::from_polar(1.0, FRAC_PI_4);
            ea1 += sm * (c[0][0] * xi[0] + c[0][1] * xi[1]) + i * (0.5 * g.g_aa * dt_over_dz);
            eb1 += sm * (c[1][0] * xi[0] + c[1][1] * xi[1]) + i * (0.5 * g.g_bb * dt_over_dz);
            ea2 += sp * (c[0][0] * xi[2] + c[0][1] * xi[3]) - i * (0.5 * g.g_aa * dt_over_dz);
            eb2 += sp * (c[1][0] * xi[2] + c[1][1] * xi[3]) - i * (0.5 * g.g_bb * dt_over_dz);
        }
        *a1 *= ea1.exp();
        *a2 *= ea2.exp();
        *b1 *= eb1.exp();
        *b2 *= eb2.exp();
    }
}

fn kinetic_apply(fft: &FftSet, field: &[C64], k2half: &[f64]) -> Vec<C64> {
    let n = field.len();
    let mut buf = field.to_vec();
    fft.fwd.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(k2half) {
        *b *= k / n as f64;
    }
    fft.inv.process(&mut buf);
    buf
}

struct FftSet {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftSet {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftSet {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }
}

/// Deterministic part of the Ito equations: time derivatives of
/// `(psi_a1, psi_a2, psi_b1, psi_b2)`.
pub fn drift(spec: &DriftDiffusionSpec, grid: &Grid1D, state: &PPlusTrajectory) -> [Vec<C64>; 4] {
    let n = state.len();
    let g = &spec.interaction;
    let (kin, pot): (Vec<f64>, Vec<f64>) = if spec.single_particle {
        (
            grid.wavenumbers().iter().map(|k| 0.5 * k * k).collect(),
            grid.points.iter().map(|z| 0.5 * z * z).collect(),
        )
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    let fft = FftSet::new(n);
    let i = C64::i();
    let mut out: [Vec<C64>; 4] = Default::default();
    let fields = [&state.a1, &state.a2, &state.b1, &state.b2];
    for (slot, (field, sign)) in fields.iter().zip([-1.0, 1.0, -1.0, 1.0]).enumerate() {
        let tk = kinetic_apply(&fft, field, &kin);
        let is_a = slot < 2;
        out[slot] = (0..n)
            .map(|k| {
                let na = state.a2[k] * state.a1[k];
                let nb = state.b2[k] * state.b1[k];
                let v = if is_a {
                    na * g.g_aa + nb * g.g_ab
                } else {
                    na * g.g_ab + nb * g.g_bb
                };
                sign * i * (tk[k] + (v + pot[k]) * field[k])
            })
            .collect();
    }
    out
}

/// Additive Ito increments `B dW` for one step, with `dW` of variance
/// `dt/dz` per point and component. Fields "1" and "2" use independent
/// Wiener increments.
pub fn noise_increment<R: Rng + ?Sized>(
    spec: &DriftDiffusionSpec,
    state: &PPlusTrajectory,
    dt: f64,
    dz: f64,
    rng: &mut R,
) -> [Vec<C64>; 4] {
    let n = state.len();
    let c = spec.factor;
    let scale = (dt / dz).sqrt();
    let sm = C64::from_polar(1.0, -FRAC_PI_4);
    let sp = C64::from_polar(1.0, FRAC_PI_4);
    let mut out: [Vec<C64>; 4] = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for k in 0..n {
        let xi: [f64; 4] = std::array::from_fn(|_| scale * rng.sample::<f64, _>(StandardNormal));
        out[0].push(sm * state.a1[k] * (c[0][0] * xi[0] + c[0][1] * xi[1]));
        out[1].push(sp * state.a2[k] * (c[0][0] * xi[2] + c[0][1] * xi[3]));
        out[2].push(sm * state.b1[k] * (c[1][0] * xi[0] + c[1][1] * xi[1]));
        out[3].push(sp * state.b2[k] * (c[1][0] * xi[2] + c[1][1] * xi[3]));
    }
    out
}

/// Strang split-step integrator: free evolution `exp(-+ i k^2/2 dt)` in
/// Fourier space, trap, interaction and noise as an exponential kick in
/// position space. Weak order one (Euler-Maruyama noise).
pub struct SplitStepper {
    spec: DriftDiffusionSpec,
    dt: f64,
    dz: f64,
    potential: Vec<f64>,
    half_minus: Vec<C64>,
    full_minus: Vec<C64>,
    fft: FftSet,
    scratch: Vec<C64>,
    cap: f64,
}

impl SplitStepper {
    pub fn new(spec: DriftDiffusionSpec, grid: &Grid1D, dt: f64, atom_number: f64) -> Self {
        let n = grid.len();
        let (kin, potential): (Vec<f64>, Vec<f64>) = if spec.single_particle {
            (
                grid.wavenumbers().iter().map(|k| 0.5 * k * k).collect(),
                grid.points.iter().map(|z| 0.5 * z * z).collect(),
            )
        } else {
            (vec![0.0; n], vec![0.0; n])
        };
        let norm = 1.0 / n as f64;
        let half_minus = kin
            .iter()
            .map(|k| C64::from_polar(norm, -0.5 * k * dt))
            .collect();
        let full_minus = kin.iter().map(|k| C64::from_polar(norm, -k * dt)).collect();
        let fft = FftSet::new(n);
        let scratch = vec![C64::new(0.0, 0.0); fft.fwd.get_inplace_scratch_len().max(fft.inv.get_inplace_scratch_len())];
        SplitStepper {
            spec,
            dt,
            dz: grid.step,
            potential,
            half_minus,
            full_minus,
            fft,
            scratch,
            cap: DIVERGENCE_CAP * atom_number.max(1.0),
        }
    }

    /// Free propagation; `conj` selects the "2" field sign.
    fn free(&mut self, field: &mut [C64], full: bool, conj: bool) {
        if !self.spec.single_particle {
            return;
        }
        let phases = if full { &self.full_minus } else { &self.half_minus };
        self.fft.fwd.process_with_scratch(field, &mut self.scratch);
        for (f, p) in field.iter_mut().zip(phases) {
            *f *= if conj { p.conj() } else { *p };
        }
        self.fft.inv.process_with_scratch(field, &mut self.scratch);
    }

    fn free_all(&mut self, t: &mut PPlusTrajectory, full: bool) {
        self.free(&mut t.a1, full, false);
        self.free(&mut t.a2, full, true);
        self.free(&mut t.b1, full, false);
        self.free(&mut t.b2, full, true);
    }

    fn kick_all<R: Rng>(&self, t: &mut PPlusTrajectory, rng: &mut R) {
        let dt_over_dz = self.dt / self.dz;
        let scale = dt_over_dz.sqrt();
        let n = t.len();
        for k in 0..n {
            let xi: [f64; 4] = if self.spec.noise {
                std::array::from_fn(|_| scale * rng.sample::<f64, _>(StandardNormal))
            } else {
                [0.0; 4]
            };
            self.spec.kick(
                [&mut t.a1[k], &mut t.a2[k], &mut t.b1[k], &mut t.b2[k]],
                self.potential[k],
                self.dt,
                dt_over_dz,
                xi,
            );
        }
    }

    /// Advance `steps` steps. Returns `false` if the trajectory diverged.
    pub fn evolve<R: Rng>(&mut self, t: &mut PPlusTrajectory, steps: usize, rng: &mut R) -> bool {
        if steps == 0 {
            return true;
        }
        self.free_all(t, false);
        for s in 0..steps {
            self.kick_all(t, rng);
            let last = s + 1 == steps;
            self.free_all(t, !last);
            if (s % 16 == 15 || last) && !self.healthy(t) {
                return false;
            }
        }
        true
    }

    fn healthy(&self, t: &PPlusTrajectory) -> bool {
        t.is_finite() && t.max_density() <= self.cap
    }
}

#[derive(Clone, Debug)]
pub struct SqueezeOutcome {
    pub ensemble: Vec<PPlusTrajectory>,
    /// Original indices of the dropped trajectories.
    pub discarded: Vec<usize>,
    pub steps: usize,
    pub dt: f64,
}

fn step_count(t: f64, dt: f64) -> (usize, f64) {
    if t <= 0.0 {
        return (0, dt);
    }
    let steps = (t / dt).round().max(1.0) as usize;
    (steps, t / steps as f64)
}

/// Evolve every trajectory for `cfg.squeeze_time`. Each trajectory draws
/// its noise from a ChaCha stream seeded with its own seed.
pub fn evolve_squeeze(
    ensemble: Vec<PPlusTrajectory>,
    cfg: &SimulationConfig,
    spec: &DriftDiffusionSpec,
) -> Result<SqueezeOutcome> {
    evolve_for(ensemble, cfg.squeeze_time, cfg.squeeze_dt, cfg, spec)
}

pub fn evolve_for(
    mut ensemble: Vec<PPlusTrajectory>,
    time: f64,
    dt: f64,
    cfg: &SimulationConfig,
    spec: &DriftDiffusionSpec,
) -> Result<SqueezeOutcome> {
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let (steps, dt) = step_count(time, dt);
    let total = ensemble.len();
    let flags = exec::map_chunks_mut(&mut ensemble, 16, |_, chunk| {
        let mut stepper = SplitStepper::new(spec.clone(), &grid, dt, cfg.atom_number);
        chunk
            .iter_mut()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
                stepper.evolve(t, steps, &mut rng)
            })
            .collect::<Vec<bool>>()
    });
    let ok: Vec<bool> = flags.into_iter().flatten().collect();
    let discarded: Vec<usize> = ok
        .iter()
        .enumerate()
        .filter(|(_, &g)| !g)
        .map(|(i, _)| i)
        .collect();
    if discarded.len() as f64 > MAX_DISCARD_FRACTION * total as f64 {
        return Err(Error::Divergence {
            discarded: discarded.len(),
            total,
        });
    }
    if !discarded.is_empty() {
        log::warn!("{} of {} trajectories diverged and were dropped", discarded.len(), total);
    }
    let kept = ensemble
        .into_iter()
        .zip(ok)
        .filter_map(|(t, g)| g.then_some(t))
        .collect();
    Ok(SqueezeOutcome {
        ensemble: kept,
        discarded,
        steps,
        dt,
    })
}

/// Total density after `cfg.squeeze_time` of noise-free evolution from the
/// coherent initial state. This is the smooth, non-negative mean density up
/// to corrections of relative order `1/N`, free of the sampling noise of an
/// ensemble average.
pub fn mean_field_density(cfg: &SimulationConfig, phi0: &[f64]) -> Result<Vec<f64>> {
    let single = SimulationConfig {
        n_traj: 1,
        ..cfg.clone()
    };
    let ensemble = crate::ensemble::init_ensemble(&single, phi0)?;
    let spec = DriftDiffusionSpec::from_config(cfg).without_noise();
    let out = evolve_squeeze(ensemble, &single, &spec)?;
    let t = out.ensemble.first().ok_or(Error::EmptyEnsemble)?;
    Ok((0..t.len())
        .map(|k| (t.a2[k] * t.a1[k] + t.b2[k] * t.b1[k]).re.max(0.0))
        .collect())
}

/// One positive-P sample of the single-spatial-mode model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeSample {
    pub a1: C64,
    pub a2: C64,
    pub b1: C64,
    pub b2: C64,
}

impl TwoModeSample {
    pub fn spin_sample(&self) -> SpinSample {
        SpinSample {
            na: self.a2 * self.a1,
            nb: self.b2 * self.b1,
            jp: self.a2 * self.b1,
            jm: self.b2 * self.a1,
        }
    }
}

/// Zero-dimensional analogue of the field equations: one spatial mode per
/// component, `H = g_aa/2 a^dag^2 a^2 + g_bb/2 b^dag^2 b^2 + g_ab a^dag
/// b^dag b a`, which for fixed atom number is one-axis twisting
/// `chi J_z^2` with `chi = (g_aa + g_bb)/2 - g_ab`.
#[derive(Clone, Debug)]
pub struct TwoModeModel {
    pub spec: DriftDiffusionSpec,
}

#[derive(Clone, Debug)]
pub struct TwoModeOutcome {
    pub samples: Vec<TwoModeSample>,
    pub discarded: usize,
    pub steps: usize,
}

impl TwoModeModel {
    pub fn new(interaction: Interaction, factorization: NoiseFactorization) -> Self {
        TwoModeModel {
            spec: DriftDiffusionSpec::new(interaction, factorization).without_single_particle(),
        }
    }

    /// Default step count: keeps `|g| N dt` at or below `1e-3`.
    pub fn default_steps(&self, mean_atoms: f64, t: f64) -> usize {
        let g = &self.spec.interaction;
        let gmax = g.g_aa.abs().max(g.g_bb.abs()).max(g.g_ab.abs());
        ((gmax * mean_atoms * t.abs() / 1e-3).ceil() as usize).max(100)
    }

    /// Evolve the coherent state `a = b = sqrt(N/2)` for time `t`.
    pub fn evolve(
        &self,
        mean_atoms: f64,
        t: f64,
        steps: usize,
        n_traj: usize,
        seed: u64,
    ) -> Result<TwoModeOutcome> {
        if n_traj == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let steps = if t == 0.0 { 0 } else { steps.max(1) };
        let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
        let amp = C64::new((0.5 * mean_atoms).sqrt(), 0.0);
        let cap = DIVERGENCE_CAP * mean_atoms.max(1.0);
        let spec = &self.spec;
        let results = exec::map_range(n_traj, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(seed, i));
            let mut s = TwoModeSample {
                a1: amp,
                a2: amp.conj(),
                b1: amp,
                b2: amp.conj(),
            };
            let scale = dt.sqrt();
            for _ in 0..steps {
                let xi: [f64; 4] = std::array::from_fn(|_| scale * rng.sample::<f64, _>(StandardNormal));
                spec.kick([&mut s.a1, &mut s.a2, &mut s.b1, &mut s.b2], 0.0, dt, dt, xi);
                let worst = [s.a1, s.a2, s.b1, s.b2]
                    .iter()
                    .map(|v| v.norm_sqr())
                    .fold(0.0, f64::max);
                if !(worst <= cap) {
                    return None;
                }
            }
            Some(s)
        });
        let discarded = results.iter().filter(|r| r.is_none()).count();
        if discarded as f64 > MAX_DISCARD_FRACTION * n_traj as f64 {
            return Err(Error::Divergence {
                discarded,
                total: n_traj,
            });
        }
        Ok(TwoModeOutcome {
            samples: results.into_iter().flatten().collect(),
            discarded,
            steps,
        })
    }
}

/// Two-mode one-axis-twisting run with `g_aa = g_bb = chi`, `g_ab = 0`.
pub fn two_mode_evolve(
    atom_number: f64,
    chi: f64,
    t: f64,
    n_traj: usize,
    seed: u64,
) -> Result<TwoModeOutcome> {
    let model = TwoModeModel::new(
        Interaction {
            g_aa: chi,
            g_ab: 0.0,
            g_bb: chi,
        },
        NoiseFactorization::Cholesky,
    );
    let steps = model.default_steps(atom_number, t);
    model.evolve(atom_number, t, steps, n_traj, seed)
}
