//! Randomized invariants.

use proptest::prelude::*;
use spinlight::checkpoint::Checkpoint;
use spinlight::grid::{fourier_refine, spectral_antiderivative};
use spinlight::quadrature::{ModeAmplitudePair, NormalMoments};
use spinlight::spin::rotate_trajectory;
use spinlight::{Grid1D, PPlusTrajectory, SimulationConfig, C64};

fn complex() -> impl Strategy<Value = C64> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn field(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), n)
}

fn trajectory(n: usize) -> impl Strategy<Value = PPlusTrajectory> {
    (field(n), field(n), field(n), field(n), any::<u64>()).prop_map(|(a1, a2, b1, b2, seed)| PPlusTrajectory {
        a1,
        a2,
        b1,
        b2,
        seed,
    })
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().max(1e-300);
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_preserves_number_and_composes(t in trajectory(16), th1 in -4.0..4.0f64, th2 in -4.0..4.0f64) {
        let grid = Grid1D::centered(16, 0.3);
        let n0 = t.number(&grid);
        let mut a = t.clone();
        rotate_trajectory(&mut a, th1);
        rotate_trajectory(&mut a, th2);
        let mut b = t.clone();
        rotate_trajectory(&mut b, th1 + th2);
        let scale: f64 = [&t.a1, &t.a2, &t.b1, &t.b2].iter().flat_map(|f| f.iter()).map(|v| v.norm_sqr()).sum::<f64>() * grid.step;
        prop_assert!((a.number(&grid) - n0).norm() <= 1e-12 * scale);
        for (x, y) in [(&a.a1, &b.a1), (&a.a2, &b.a2), (&a.b1, &b.b1), (&a.b2, &b.b2)] {
            prop_assert!(rel(x, y) < 1e-12);
        }
    }

    #[test]
    fn classical_samples_never_beat_vacuum(samples in prop::collection::vec(complex(), 2..60), phi in 0.0..3.2f64) {
        // a2 = conj(a1) is a coherent-state mixture, which has no squeezing
        let amps: Vec<ModeAmplitudePair> = samples.iter().map(|&a| ModeAmplitudePair { a1: a, a2: a.conj() }).collect();
        let m = NormalMoments::of(&amps, None);
        let (v_min, phi_min) = m.minimum();
        prop_assert!(v_min >= 0.5 - 1e-9);
        prop_assert!(m.variance(phi) >= v_min - 1e-9);
        prop_assert!(m.variance(phi) <= m.maximum() + 1e-9);
        prop_assert!((m.variance(phi_min) - v_min).abs() < 1e-9 * (1.0 + v_min));
        prop_assert!((m.variance(phi) - m.variance(phi + std::f64::consts::PI)).abs() < 1e-9 * (1.0 + v_min));
    }

    #[test]
    fn refinement_keeps_original_samples(values in field(24), factor in 1usize..5) {
        let fine = fourier_refine(&values, factor);
        prop_assert_eq!(fine.len(), 24 * factor);
        let back: Vec<C64> = fine.iter().step_by(factor).copied().collect();
        prop_assert!(rel(&back, &values) < 1e-12);
    }

    #[test]
    fn antiderivative_differences_integrate_trig_modes(k in 1usize..7, phase in 0.0..6.3f64, amp in 0.1..3.0f64) {
        let n = 32;
        let h = 0.25;
        let len = n as f64 * h;
        let w = 2.0 * std::f64::consts::PI * k as f64 / len;
        let values: Vec<f64> = (0..n).map(|j| amp * (w * j as f64 * h + phase).cos()).collect();
        let f = spectral_antiderivative(&values, h, 2);
        for (j, fj) in f.iter().enumerate() {
            let x = j as f64 * h / 2.0;
            let exact = amp / w * ((w * x + phase).sin() - phase.sin());
            prop_assert!((fj - exact).abs() < 1e-10, "{} vs {}", fj, exact);
        }
    }

    #[test]
    fn checkpoint_round_trips(ens in prop::collection::vec(trajectory(16), 1..4), steps in 0usize..5000, seed in 0..=i64::MAX as u64) {
        let cfg = SimulationConfig { nz: 16, dz: 0.8, n_traj: ens.len(), seed, ..Default::default() };
        let c = Checkpoint { config: cfg, ensemble: ens, discarded: vec![], steps };
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        prop_assert_eq!(Checkpoint::read_from(&mut buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn config_text_round_trips(n in 100.0..1e4f64, g in 0.0..1e-2f64, t in 0.0..5.0f64, theta in 0.0..3.1f64, seed in 0..=i64::MAX as u64) {
        let cfg = SimulationConfig { atom_number: n, g_aa: g, g_bb: g, g_ab: 0.5 * g, squeeze_time: t, theta, seed, ..Default::default() };
        let back = SimulationConfig::from_toml_str(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.hash64(), cfg.hash64());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn seeds_beyond_toml_range_are_rejected(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let cfg = SimulationConfig { seed, ..Default::default() };
        prop_assert!(cfg.validate().is_err());
    }
}
