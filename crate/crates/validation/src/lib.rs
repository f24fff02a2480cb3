//! Fixtures shared by the acceptance runs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spinlight::ground_state::ground_state;
use spinlight::raman::OpticalStage;
use spinlight::{Grid1D, SimulationConfig, C64};

/// Optical stage on the ground-state density `N phi0^2`.
pub fn stage(cfg: &SimulationConfig) -> OpticalStage {
    let gs = ground_state(cfg).unwrap();
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let n: Vec<f64> = gs.phi.iter().map(|p| cfg.atom_number * p * p).collect();
    OpticalStage::from_config(cfg, &grid, &n).unwrap()
}

/// `|a - b|_2 / |b|_2`.
pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Random cubic polynomial times the density, so the profile is smooth and
/// confined to the cloud.
pub fn smooth_profile(rng: &mut ChaCha8Rng, grid: &Grid1D, density: &[f64]) -> Vec<C64> {
    let coeffs: Vec<C64> = (0..4).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let width = rng.random_range(1.0..3.0);
    let shift = rng.random_range(-0.5..0.5);
    grid.points
        .iter()
        .zip(density)
        .map(|(&z, &n)| {
            let u = (z - shift) / width;
            let poly = coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c);
            poly * n * 1e-2
        })
        .collect()
}
