use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::C64;

/// One positive-P sample of the two-component atomic field: `(psi_a1,
/// psi_a2, psi_b1, psi_b2)` stand in for `(psi_a, psi_a^dag, psi_b,
/// psi_b^dag)`. Amplitudes are in `l0^(-1/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PPlusTrajectory {
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    pub b1: Vec<C64>,
    pub b2: Vec<C64>,
    pub seed: u64,
}

/// Collective positive-P numbers of one sample: populations and the
/// `J_+ = int psi_a^dag psi_b`, `J_- = int psi_b^dag psi_a` coherences.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpinSample {
    pub na: C64,
    pub nb: C64,
    pub jp: C64,
    pub jm: C64,
}

impl PPlusTrajectory {
    pub fn len(&self) -> usize {
        self.a1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a1.is_empty()
    }

    /// `int (psi_a2 psi_a1 + psi_b2 psi_b1) dz`
    pub fn number(&self, grid: &Grid1D) -> C64 {
        let s = self.spin_sample(grid);
        s.na + s.nb
    }

    pub fn spin_sample(&self, grid: &Grid1D) -> SpinSample {
        let prod = |x: &[C64], y: &[C64]| -> Vec<C64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
        SpinSample {
            na: grid.integrate_c(&prod(&self.a2, &self.a1)),
            nb: grid.integrate_c(&prod(&self.b2, &self.b1)),
            jp: grid.integrate_c(&prod(&self.a2, &self.b1)),
            jm: grid.integrate_c(&prod(&self.b2, &self.a1)),
        }
    }

    /// Dipole densities `(psi_b2 psi_a1, psi_a2 psi_b1)` that source the
    /// two positive-P copies of the emitted field.
    pub fn dipoles(&self) -> (Vec<C64>, Vec<C64>) {
        let d1 = self.b2.iter().zip(&self.a1).map(|(b, a)| b * a).collect();
        let d2 = self.a2.iter().zip(&self.b1).map(|(a, b)| a * b).collect();
        (d1, d2)
    }

    pub fn max_density(&self) -> f64 {
        [&self.a1, &self.a2, &self.b1, &self.b2]
            .iter()
            .flat_map(|f| f.iter())
            .map(|v| v.norm_sqr())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        [&self.a1, &self.a2, &self.b1, &self.b2]
            .iter()
            .flat_map(|f| f.iter())
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// SplitMix64 finalizer, used to spread trajectory indices over seed space.
pub fn trajectory_seed(master: u64, index: usize) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Coherent equal superposition of `a` and `b` in the condensate mode
/// `phi0`: `psi_a1 = psi_a2* = psi_b1 = psi_b2* = sqrt(N/2) phi0`.
pub fn init_ensemble(cfg: &SimulationConfig, phi0: &[f64]) -> Result<Vec<PPlusTrajectory>> {
    if cfg.n_traj == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let amp = (0.5 * cfg.atom_number).sqrt();
    let field: Vec<C64> = phi0.iter().map(|&p| C64::new(amp * p, 0.0)).collect();
    let conj: Vec<C64> = field.iter().map(|v| v.conj()).collect();
    Ok((0..cfg.n_traj)
        .map(|i| PPlusTrajectory {
            a1: field.clone(),
            a2: conj.clone(),
            b1: field.clone(),
            b2: conj.clone(),
            seed: trajectory_seed(cfg.seed, i),
        })
        .collect())
}

/// Ensemble-mean total density `Re <psi_a2 psi_a1 + psi_b2 psi_b1>` on the grid.
pub fn mean_density(ensemble: &[PPlusTrajectory]) -> Vec<f64> {
    let Some(first) = ensemble.first() else {
        return Vec::new();
    };
    let n = first.len();
    let per: Vec<Vec<f64>> = ensemble
        .iter()
        .map(|t| {
            (0..n)
                .map(|k| (t.a2[k] * t.a1[k] + t.b2[k] * t.b1[k]).re)
                .collect()
        })
        .collect();
    (0..n)
        .map(|k| {
            let col: Vec<f64> = per.iter().map(|p| p[k]).collect();
            crate::stats::mean(&col)
        })
        .collect()
}
