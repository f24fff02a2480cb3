//! Ground state, squeezing dynamics and the exact twisting solution.

use spinlight::dicke::dicke_oracle;
use spinlight::dynamics::{evolve_for, DriftDiffusionSpec};
use spinlight::ensemble::init_ensemble;
use spinlight::ground_state::{ground_state, ground_state_on};
use spinlight::harness::squeeze_stage;
use spinlight::spin::spin_moments;
use spinlight::{Grid1D, SimulationConfig};

fn small(n_traj: usize, squeeze_time: f64) -> SimulationConfig {
    SimulationConfig {
        nz: 64,
        dz: 0.16,
        squeeze_time,
        n_traj,
        ..Default::default()
    }
}

#[test]
fn chemical_potential_is_close_to_thomas_fermi() {
    let cfg = SimulationConfig::default();
    let gs = ground_state(&cfg).unwrap();
    let tf = cfg.thomas_fermi_mu();
    assert!((gs.chemical_potential / tf - 1.0).abs() < 0.05, "mu {} vs {tf}", gs.chemical_potential);
    // kinetic energy raises mu above the Thomas-Fermi value
    assert!(gs.chemical_potential > tf);
}

#[test]
fn ground_state_is_stable_under_grid_halving() {
    let coarse = ground_state_on(&Grid1D::centered(256, 0.05), 10.0).unwrap();
    let fine = ground_state_on(&Grid1D::centered(512, 0.025), 10.0).unwrap();
    assert!((coarse.chemical_potential - fine.chemical_potential).abs() < 1e-7);
    // fine grid point 2k coincides with coarse point k
    let worst = coarse
        .phi
        .iter()
        .enumerate()
        .map(|(k, p)| (p - fine.phi[2 * k]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn noise_free_evolution_conserves_atom_number() {
    let cfg = small(1, 2.0);
    let gs = ground_state(&cfg).unwrap();
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let ens = init_ensemble(&cfg, &gs.phi).unwrap();
    let spec = DriftDiffusionSpec::from_config(&cfg).without_noise();
    let out = evolve_for(ens, cfg.squeeze_time, cfg.squeeze_dt, &cfg, &spec).unwrap();
    let n = out.ensemble[0].number(&grid);
    assert!((n.re / cfg.atom_number - 1.0).abs() < 1e-9, "{n}");
    assert!(n.im.abs() < 1e-9 * cfg.atom_number);
}

#[test]
fn coherent_initial_state_has_standard_noise() {
    let cfg = small(4000, 0.0);
    let gs = ground_state(&cfg).unwrap();
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let ens = init_ensemble(&cfg, &gs.phi).unwrap();
    let m = spin_moments(&ens, &grid, 3).unwrap();
    let n = cfg.atom_number;
    assert!((m.mean()[0] / (0.5 * n) - 1.0).abs() < 1e-9);
    assert!((m.variance(1) / (0.25 * n) - 1.0).abs() < 1e-9);
    assert!((m.variance(2) / (0.25 * n) - 1.0).abs() < 1e-9);
}

#[test]
fn stochastic_evolution_conserves_mean_atom_number() {
    let sq = squeeze_stage(&small(1000, 1.0)).unwrap();
    let rotated = sq.spin.iter().find(|r| r.stage == "rotated").unwrap();
    let m = &rotated.moments;
    let n = m.state.mean_atoms;
    // Poisson spread of a coherent input, sqrt(N) per trajectory
    let err = (2000.0f64 / m.n_samples as f64).sqrt();
    assert!((n - 2000.0).abs() < 4.0 * err, "mean atoms {n} +- {err}");
}

#[test]
fn squeezing_improves_with_time() {
    let early = squeeze_stage(&small(1000, 0.5)).unwrap();
    let late = squeeze_stage(&small(1000, 2.0)).unwrap();
    let xi = |s: &spinlight::harness::SqueezeStage| {
        s.spin.iter().find(|r| r.stage == "squeezed").unwrap().squeezing.unwrap()
    };
    let (a, b) = (xi(&early), xi(&late));
    assert!(a.value < 1.0 && b.value < a.value, "{a:?} {b:?}");
}

/// Closed-form one-axis twisting results for `H = chi J_z^2` from a
/// coherent state along `x`.
fn twisting_closed_form(n: f64, mu: f64) -> (f64, f64) {
    let jx = 0.5 * n * (0.5 * mu).cos().powf(n - 1.0);
    let a = 1.0 - mu.cos().powf(n - 2.0);
    let b = 4.0 * (0.5 * mu).sin() * (0.5 * mu).cos().powf(n - 2.0);
    let v_min = 0.25 * n * (1.0 + 0.25 * (n - 1.0) * (a - (a * a + b * b).sqrt()));
    (jx, v_min)
}

#[test]
fn dicke_solution_matches_closed_form_twisting() {
    for (n, chi_t) in [(20usize, 0.02), (20, 0.1), (200, 0.01), (500, 0.003)] {
        let s = dicke_oracle(n, 1.0, chi_t);
        let (jx, v_min) = twisting_closed_form(n as f64, 2.0 * chi_t);
        assert!((s.mean[0] - jx).abs() < 1e-9 * jx, "N {n}: {} vs {jx}", s.mean[0]);
        assert!(s.mean[1].abs() < 1e-9 && s.mean[2].abs() < 1e-9);
        let t = s.transverse();
        assert!((t.min_variance - v_min).abs() < 1e-8 * n as f64, "N {n}: {} vs {v_min}", t.min_variance);
        assert!((s.covariance()[2][2] - 0.25 * n as f64).abs() < 1e-9 * n as f64);
    }
}
