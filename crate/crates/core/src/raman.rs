//! Optical stage: the pump envelope, the Raman gain integral and the map
//! from a post-rotation atomic sample to the pair of emitted field copies
//! at the exit face `z = L`.
//!
//! In the linearized regime the collective dipole `P = psi_b^dag psi_a`
//! and the emitted field obey
//!
//! ```text
//! dE1/dz   = -i kappa2 E_s(tau) P1,
//! dP1/dtau = -i kappa1 n(z) E_s(tau) E1,
//! ```
//!
//! with the mirror-image equations (`+i`) for the second positive-P copy.
//! The solution with a vacuum input is a Bessel-kernel integral over the
//! initial dipole,
//!
//! ```text
//! E1(tau) = -i kappa2 E_s(tau) int P1(z) J0(2 sqrt(a(tau) U(z))) dz,
//! ```
//!
//! with `a` the gain integral and `U(z) = int_z^L n` the column density.
//! It is evaluated after an integration by parts,
//!
//! ```text
//! int P J0 dz = D(L) - int D(z) n(z) sqrt(a / U) J1(2 sqrt(a U)) dz,
//! ```
//!
//! where `D(z) = int_0^z P` is computed spectrally. Positive-P samples carry
//! grid-scale dipole noise over the whole box, including the empty tails;
//! in this form that noise enters only through its running integral and
//! only where atoms are present, which keeps the quadrature converged. The
//! form is implemented in [`OpticalStage::analytic_from_dipoles`];
//! [`fd_field`] integrates the same equations on a grid and serves as an
//! independent check.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bessel::j1;
use crate::config::SimulationConfig;
use crate::ensemble::PPlusTrajectory;
use crate::error::{Error, Result};
use crate::grid::{fourier_refine, spectral_antiderivative, spectral_antiderivative_complex, Grid1D};
use crate::C64;

/// Largest admissible change of the Bessel argument `2 sqrt(a N)` over one
/// retarded-time step of the finite-difference solver.
pub const MAX_PHASE_STEP: f64 = 0.5;

/// Fraction of atoms in `b` above which the linearized emission model is
/// flagged as questionable.
pub const LINEARIZATION_WARN_FRACTION: f64 = 0.05;

const MINUS_I: C64 = C64::new(0.0, -1.0);
const PLUS_I: C64 = C64::new(0.0, 1.0);

/// Classical pump amplitude on the retarded-time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpEnvelope {
    pub tau: Grid1D,
    pub values: Vec<f64>,
    pub e_max: f64,
    pub t_rise: f64,
}

impl PumpEnvelope {
    /// `E_max sin^2(pi tau / 2 t_rise)` up to `t_rise`, flat afterwards.
    pub fn shape(tau: f64, e_max: f64, t_rise: f64) -> f64 {
        if tau <= 0.0 {
            0.0
        } else if tau < t_rise {
            let s = (std::f64::consts::FRAC_PI_2 * tau / t_rise).sin();
            e_max * s * s
        } else {
            e_max
        }
    }

    pub fn on(tau: Grid1D, e_max: f64, t_rise: f64) -> Result<Self> {
        if tau.extent() < t_rise {
            return Err(Error::Grid(format!(
                "retarded-time window {} is shorter than the pump rise time {t_rise}",
                tau.extent()
            )));
        }
        let values = tau.points.iter().map(|&t| Self::shape(t, e_max, t_rise)).collect();
        Ok(PumpEnvelope {
            tau,
            values,
            e_max,
            t_rise,
        })
    }

    /// The same envelope on a grid `factor` times finer in `tau`.
    pub fn subdivided(&self, factor: usize) -> PumpEnvelope {
        if self.values.iter().zip(&self.tau.points).any(|(&v, &t)| v != Self::shape(t, self.e_max, self.t_rise)) {
            // hand-made envelope: hold values between samples
            let tau = Grid1D::from_origin((self.tau.len() - 1) * factor + 1, self.tau.step / factor as f64);
            let values = (0..tau.len()).map(|i| self.values[i.div_ceil(factor)]).collect();
            return PumpEnvelope { tau, values, e_max: self.e_max, t_rise: self.t_rise };
        }
        let n = (self.tau.len() - 1) * factor + 1;
        let tau = Grid1D::from_origin(n, self.tau.step / factor as f64);
        let values = tau.points.iter().map(|&t| Self::shape(t, self.e_max, self.t_rise)).collect();
        PumpEnvelope {
            tau,
            values,
            e_max: self.e_max,
            t_rise: self.t_rise,
        }
    }
}

pub fn pump(cfg: &SimulationConfig) -> Result<PumpEnvelope> {
    PumpEnvelope::on(Grid1D::from_origin(cfg.ntau, cfg.dtau), cfg.e_max, cfg.t_rise)
}

/// Gain integral `a(tau) = kappa1 kappa2 int_0^tau E_s^2` and the column
/// density `U(z) = int_z^L n` that together set the Bessel argument
/// `2 sqrt(a U)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainProfile {
    pub gain: Vec<f64>,
    pub column: Vec<f64>,
    /// First and last refined-grid index of the medium.
    pub lo: usize,
    pub hi: usize,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl GainProfile {
    pub fn total_atoms(&self) -> f64 {
        self.column.first().copied().unwrap_or(0.0)
    }
}

/// Cumulative trapezoid of `f` sampled with spacing `h`, starting at zero.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    for (i, &v) in f.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (f[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Sub-steps per `tau` step used for the gain quadrature. The Bessel
/// argument `2 sqrt(a N)` magnifies errors in `a` by `sqrt(N / a)`, so the
/// coarse trapezoid alone is not accurate enough.
pub const GAIN_SUBSTEPS: usize = 16;

/// Atoms of the mean-field density left outside the optical medium, split
/// evenly between its two ends. The rest of the box holds no atoms on
/// average, but positive-P samples carry dipole noise there that would
/// radiate without absorption; keeping it out of the medium removes a large
/// zero-mean contribution to the sampling error of field correlations.
pub const MEDIUM_TAIL_ATOMS: f64 = 1e-3;

/// Gain and column density for a density profile sampled on the coarse
/// `z` grid, with the column evaluated on the grid `refine` times finer.
/// The column is the exact integral of the band-limited density, so the
/// Bessel kernel carries no quadrature kinks that would couple grid-scale
/// dipole noise into the field. The medium spans refined-grid indices
/// `lo..=hi`, both multiples of `refine`, see [`MEDIUM_TAIL_ATOMS`].
pub fn gain(
    pump: &PumpEnvelope,
    z: &Grid1D,
    density: &[f64],
    refine: usize,
    kappa1: f64,
    kappa2: f64,
) -> GainProfile {
    let fine = pump.subdivided(GAIN_SUBSTEPS);
    let sq: Vec<f64> = fine.values.iter().map(|e| kappa1 * kappa2 * e * e).collect();
    let gain = cumulative_trapezoid(&sq, fine.tau.step).into_iter().step_by(GAIN_SUBSTEPS).collect();
    let running = spectral_antiderivative(density, z.step, refine);
    let total = z.step * density.iter().sum::<f64>();
    let half = 0.5 * MEDIUM_TAIL_ATOMS;
    let last = running.len().saturating_sub(1);
    // the ends sit on coarse points, so the medium does not move with `refine`
    let coarse: Vec<f64> = running.iter().step_by(refine.max(1)).copied().collect();
    let mut lo = coarse.iter().rposition(|&f| f <= half).unwrap_or(0) * refine;
    let mut hi = coarse.iter().position(|&f| total - f <= half).map_or(last, |k| k * refine);
    if hi <= lo {
        (lo, hi) = (0, last);
    }
    let mut column: Vec<f64> = (0..running.len())
        .map(|k| (running[hi] - running[k.clamp(lo, hi)]).max(0.0))
        .collect();
    // Clip ringing so the column is non-increasing along z.
    for k in (0..column.len().saturating_sub(1)).rev() {
        column[k] = column[k].max(column[k + 1]);
    }
    GainProfile {
        gain,
        column,
        lo,
        hi,
        kappa1,
        kappa2,
    }
}

/// `-dJ0(2 sqrt(a U))/dU = sqrt(a / U) J1(2 sqrt(a U))`, equal to `a` at
/// `U = 0`.
pub fn bessel_slope(a: f64, column: f64) -> f64 {
    let x = 2.0 * (a * column).sqrt();
    if x < 1e-8 {
        a
    } else {
        2.0 * a * j1(x) / x
    }
}

/// The two positive-P copies of the emitted field at the exit face.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorFieldPair {
    pub e1: Vec<C64>,
    pub e2: Vec<C64>,
}

impl DetectorFieldPair {
    pub fn len(&self) -> usize {
        self.e1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e1.is_empty()
    }
}

/// Precomputed optical stage for one ensemble: pump, gain, density on the
/// refined z-grid and the weighted Bessel kernel.
#[derive(Clone, Debug)]
pub struct OpticalStage {
    pub pump: PumpEnvelope,
    pub gain: GainProfile,
    /// z-grid of the squeezing stage.
    pub coarse_grid: Grid1D,
    pub coarse_density: Vec<f64>,
    pub refine: usize,
    /// Refined z-grid on which the dipoles are integrated.
    pub grid: Grid1D,
    pub density: Vec<f64>,
    // kernel[m * width + j] = w_k n_k sqrt(a_m / U_k) J1(2 sqrt(a_m U_k))
    // with k = lo + j over the medium
    kernel: Vec<f64>,
}

/// Band-limited interpolation of a real, non-negative profile; the small
/// negative ringing in the tails is clipped.
pub fn refine_density(density: &[f64], factor: usize) -> Vec<f64> {
    let c: Vec<C64> = density.iter().map(|&v| C64::new(v, 0.0)).collect();
    fourier_refine(&c, factor).iter().map(|v| v.re.max(0.0)).collect()
}

impl OpticalStage {
    pub fn new(
        pump: PumpEnvelope,
        coarse_grid: &Grid1D,
        coarse_density: &[f64],
        kappa1: f64,
        kappa2: f64,
        refine: usize,
    ) -> Result<Self> {
        if coarse_density.len() != coarse_grid.len() {
            return Err(Error::Grid(format!(
                "density has {} points, grid has {}",
                coarse_density.len(),
                coarse_grid.len()
            )));
        }
        if refine == 0 {
            return Err(Error::config("optics.z_refine", "must be at least 1"));
        }
        let grid = coarse_grid.refined(refine);
        let density = refine_density(coarse_density, refine);
        let gain = gain(&pump, coarse_grid, coarse_density, refine, kappa1, kappa2);
        let (lo, hi) = (gain.lo, gain.hi);
        let width = hi - lo + 1;
        let mut kernel = vec![0.0; pump.tau.len() * width];
        for (m, row) in kernel.chunks_mut(width).enumerate() {
            let a = gain.gain[m];
            for (j, v) in row.iter_mut().enumerate() {
                let k = lo + j;
                let w = if k == lo || k == hi { 0.5 * grid.step } else { grid.step };
                *v = w * density[k] * bessel_slope(a, gain.column[k]);
            }
        }
        Ok(OpticalStage {
            pump,
            gain,
            coarse_grid: coarse_grid.clone(),
            coarse_density: coarse_density.to_vec(),
            refine,
            grid,
            density,
            kernel,
        })
    }

    pub fn from_config(cfg: &SimulationConfig, grid: &Grid1D, density: &[f64]) -> Result<Self> {
        Self::new(pump(cfg)?, grid, density, cfg.kappa1, cfg.kappa2(), cfg.z_refine)
    }

    pub fn tau(&self) -> &Grid1D {
        &self.pump.tau
    }

    /// Dipole densities of a trajectory interpolated onto the refined grid.
    pub fn refined_dipoles(&self, traj: &PPlusTrajectory) -> (Vec<C64>, Vec<C64>) {
        let r = |f: &[C64]| fourier_refine(f, self.refine);
        let (a1, a2, b1, b2) = (r(&traj.a1), r(&traj.a2), r(&traj.b1), r(&traj.b2));
        let d1 = b2.iter().zip(&a1).map(|(b, a)| b * a).collect();
        let d2 = a2.iter().zip(&b1).map(|(a, b)| a * b).collect();
        (d1, d2)
    }

    /// Field at the exit face driven by the dipole profile `d` on the
    /// refined grid; `sign` is `-i` for the first copy and `+i` for the
    /// second.
    fn propagate(&self, d: &[C64], sign: C64) -> Vec<C64> {
        let (lo, hi) = (self.gain.lo, self.gain.hi);
        let k2 = self.gain.kappa2;
        let running = spectral_antiderivative_complex(d, self.grid.step, 1);
        let base = running[lo];
        let inside: Vec<C64> = running[lo..=hi].iter().map(|x| x - base).collect();
        let total = inside[inside.len() - 1];
        self.kernel
            .chunks(inside.len())
            .zip(&self.pump.values)
            .map(|(row, &es)| {
                let mut acc = C64::new(0.0, 0.0);
                for (w, x) in row.iter().zip(&inside) {
                    acc += x * *w;
                }
                sign * (k2 * es) * (total - acc)
            })
            .collect()
    }

    pub fn analytic_from_dipoles(&self, d1: &[C64], d2: &[C64]) -> DetectorFieldPair {
        DetectorFieldPair {
            e1: self.propagate(d1, MINUS_I),
            e2: self.propagate(d2, PLUS_I),
        }
    }

    pub fn analytic_field(&self, traj: &PPlusTrajectory) -> DetectorFieldPair {
        let (d1, d2) = self.refined_dipoles(traj);
        self.analytic_from_dipoles(&d1, &d2)
    }

    /// c-number field emitted by a classical dipole profile `h` given on
    /// the refined grid. Linear in `h`.
    pub fn classical_mode_solve(&self, h: &[C64]) -> Vec<C64> {
        self.propagate(h, MINUS_I)
    }

    /// Expected emission mode: the classical solution for a uniform
    /// per-atom dipole, `h = n(z)`. Unnormalized.
    pub fn expected_mode(&self) -> Vec<C64> {
        let h: Vec<C64> = self.density.iter().map(|&n| C64::new(n, 0.0)).collect();
        self.classical_mode_solve(&h)
    }

    pub fn fd_field(&self, traj: &PPlusTrajectory, settings: FdSettings) -> Result<DetectorFieldPair> {
        let factor = self.refine * settings.z_refine;
        let r = |f: &[C64]| fourier_refine(f, factor);
        let (a1, a2, b1, b2) = (r(&traj.a1), r(&traj.a2), r(&traj.b1), r(&traj.b2));
        let d1: Vec<C64> = b2.iter().zip(&a1).map(|(b, a)| b * a).collect();
        let d2: Vec<C64> = a2.iter().zip(&b1).map(|(a, b)| a * b).collect();
        self.fd_from_dipoles(&d1, &d2, settings)
    }

    /// Finite-difference solution for dipoles given on the z-grid refined
    /// by `self.refine * settings.z_refine`.
    pub fn fd_from_dipoles(&self, d1: &[C64], d2: &[C64], settings: FdSettings) -> Result<DetectorFieldPair> {
        let factor = self.refine * settings.z_refine;
        let grid = self.coarse_grid.refined(factor);
        let density = refine_density(&self.coarse_density, factor);
        if d1.len() != grid.len() || d2.len() != grid.len() {
            return Err(Error::Grid(format!(
                "dipole profile has {} points, expected {}",
                d1.len(),
                grid.len()
            )));
        }
        let fine = self.pump.subdivided(settings.tau_substeps);
        let problem = FdProblem {
            grid: &grid,
            lo: self.gain.lo * settings.z_refine,
            hi: self.gain.hi * settings.z_refine,
            density: &density,
            pump: &fine,
            kappa1: self.gain.kappa1,
            kappa2: self.gain.kappa2,
        };
        problem.check_step(self.pump.tau.step)?;
        let pick = |e: Vec<C64>| -> Vec<C64> { e.into_iter().step_by(settings.tau_substeps).collect() };
        Ok(DetectorFieldPair {
            e1: pick(problem.solve(d1, MINUS_I)),
            e2: pick(problem.solve(d2, PLUS_I)),
        })
    }
}

/// Largest z step of the finite-difference solver at which it agrees with
/// the analytic stage to well below `1e-3` relative L2 on positive-P samples.
pub const FD_CONVERGED_STEP: f64 = 1e-3;

/// Resolution of the finite-difference solver relative to the analytic
/// stage: z is refined by a further `z_refine`, each `tau` step is split in
/// `tau_substeps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FdSettings {
    pub z_refine: usize,
    pub tau_substeps: usize,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            z_refine: 8,
            tau_substeps: 16,
        }
    }
}

impl FdSettings {
    /// Settings whose z step does not exceed [`FD_CONVERGED_STEP`] on top of
    /// an analytic grid with spacing `analytic_step`.
    pub fn converged(analytic_step: f64) -> Self {
        FdSettings {
            z_refine: (analytic_step / FD_CONVERGED_STEP).ceil().max(1.0) as usize,
            ..Default::default()
        }
    }
}

struct FdProblem<'a> {
    grid: &'a Grid1D,
    // medium, as grid indices
    lo: usize,
    hi: usize,
    density: &'a [f64],
    pump: &'a PumpEnvelope,
    kappa1: f64,
    kappa2: f64,
}

impl FdProblem<'_> {
    /// Rejects `tau` steps over which the Bessel argument for the whole
    /// column advances by more than [`MAX_PHASE_STEP`].
    fn check_step(&self, coarse_step: f64) -> Result<()> {
        let h = self.pump.tau.step;
        let sq: Vec<f64> = self.pump.values.iter().map(|e| self.kappa1 * self.kappa2 * e * e).collect();
        let a = cumulative_trapezoid(&sq, h);
        let total = (self.grid.step * self.density[self.lo..=self.hi].iter().sum::<f64>()).max(0.0);
        let phase = |a: f64| 2.0 * (a * total).sqrt();
        let worst = a.windows(2).map(|w| phase(w[1]) - phase(w[0])).fold(0.0, f64::max);
        if worst > MAX_PHASE_STEP {
            let substeps = (self.pump.tau.len() - 1) as f64 * h / coarse_step;
            let suggested = 0.9 * coarse_step * MAX_PHASE_STEP / worst;
            return Err(Error::StepMismatch {
                reason: format!(
                    "Bessel argument advances by {worst:.3} per step (limit {MAX_PHASE_STEP}) with {substeps:.0} steps"
                ),
                suggested_dtau: suggested,
            });
        }
        Ok(())
    }

    /// Marches from the entry face to the exit face of the medium with
    /// trapezoidal steps in both directions. Each `(z, tau)` cell couples the new field and
    /// dipole through a 2x2 linear system that is solved in closed form.
    fn solve(&self, dipole: &[C64], sign: C64) -> Vec<C64> {
        let nt = self.pump.tau.len();
        let dtau = self.pump.tau.step;
        let es = &self.pump.values;
        let zero = C64::new(0.0, 0.0);
        // entry face: no field, so the dipole is frozen
        let mut field = vec![zero; nt];
        let mut dip = vec![dipole[self.lo]; nt];
        let mut next_field = vec![zero; nt];
        let mut next_dip = vec![zero; nt];
        let hz = self.grid.step;
        for j in self.lo + 1..=self.hi {
            let n = self.density[j];
            let cz = sign * (0.5 * hz * self.kappa2);
            let ct = sign * (0.5 * dtau * self.kappa1 * n);
            for m in 0..nt {
                let (carry, new_p0) = if m == 0 {
                    (dipole[j], zero)
                } else {
                    (next_dip[m - 1] + ct * es[m - 1] * next_field[m - 1], ct * es[m])
                };
                // E = field[m] + cz es (dip[m] + P),  P = carry + new_p0 E
                let rhs = field[m] + cz * es[m] * (dip[m] + carry);
                let e = rhs / (C64::new(1.0, 0.0) - cz * es[m] * new_p0);
                next_field[m] = e;
                next_dip[m] = carry + new_p0 * e;
            }
            std::mem::swap(&mut field, &mut next_field);
            std::mem::swap(&mut dip, &mut next_dip);
        }
        field
    }
}

/// Mean fraction of atoms in `b` over the ensemble; warns when the
/// linearized emission model is stretched.
pub fn check_linearization(ensemble: &[PPlusTrajectory], grid: &Grid1D) -> f64 {
    if ensemble.is_empty() {
        return 0.0;
    }
    let (mut nb, mut nt) = (0.0, 0.0);
    for t in ensemble {
        let s = t.spin_sample(grid);
        nb += s.nb.re;
        nt += (s.na + s.nb).re;
    }
    let frac = if nt > 0.0 { nb / nt } else { 0.0 };
    if frac >= LINEARIZATION_WARN_FRACTION {
        warn!("mean b population fraction {frac:.3} exceeds {LINEARIZATION_WARN_FRACTION}; linearized emission is approximate");
    }
    frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pump_shape_landmarks() {
        let p = PumpEnvelope::on(Grid1D::from_origin(401, 0.5), 100.0, 100.0).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert!((p.values[100] - 50.0).abs() < 1e-12);
        assert!(p.values[200..].iter().all(|&v| v == 100.0));
        assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn short_window_is_rejected() {
        assert!(PumpEnvelope::on(Grid1D::from_origin(100, 0.5), 100.0, 100.0).is_err());
    }

    #[test]
    fn flat_pump_gives_linear_gain() {
        let tau = Grid1D::from_origin(101, 1.0);
        let p = PumpEnvelope {
            values: vec![100.0; 101],
            tau,
            e_max: 100.0,
            t_rise: 0.0,
        };
        let z = Grid1D::centered(16, 0.1);
        let g = gain(&p, &z, &[1.0; 16], 1, 1e-3, 1e-3);
        for (k, a) in g.gain.iter().enumerate() {
            assert!((a - 1e-2 * k as f64).abs() < 1e-12);
        }
        let g2 = gain(&p, &z, &[1.0; 16], 1, 2e-3, 2e-3);
        assert!((g2.gain[100] - 4.0 * g.gain[100]).abs() < 1e-12);
        assert!((g.total_atoms() - 1.5).abs() < 1e-12);
        assert_eq!((g.lo, g.hi), (0, 15));
        assert_eq!(*g.column.last().unwrap(), 0.0);
    }
}
