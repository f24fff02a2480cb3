//! Artifacts, stage separation and the figure-input CSV schemas.

use std::fs;
use std::path::Path;

use spinlight::harness::{plot_data, run_full, run_optics, run_squeeze, OpticsOptions, RunManifest};
use spinlight::quadrature::{HistogramSpec, SCATTER_POINTS};
use spinlight::SimulationConfig;

fn small() -> SimulationConfig {
    SimulationConfig {
        nz: 64,
        dz: 0.16,
        squeeze_time: 0.3,
        n_traj: 24,
        seed: 11,
        ..Default::default()
    }
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn staged_run_matches_single_process_run() {
    let cfg = small();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sq = run_squeeze(&cfg, a.path()).unwrap();
    let op = run_optics(&a.path().join("checkpoint.bin"), b.path(), OpticsOptions::default()).unwrap();
    let full = run_full(&cfg, c.path(), OpticsOptions::default()).unwrap();
    assert_eq!(full.artifacts.len(), sq.artifacts.len() + op.artifacts.len());
    for art in sq.artifacts.iter().chain(&op.artifacts) {
        assert_eq!(full.hash_of(&art.file), Some(art.sha256.as_str()), "{}", art.file);
    }
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(c.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m, full);
    assert_eq!(m.config_hash, format!("{:016x}", cfg.hash64()));
}

#[test]
fn figure_inputs_follow_their_schemas() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    run_full(&cfg, dir.path(), OpticsOptions::default()).unwrap();
    let d = dir.path();

    let (h, pump) = read_csv(&d.join("pump.csv"));
    assert_eq!(h, "tau,e_s");
    assert_eq!(pump.len(), cfg.ntau);
    assert!(pump.iter().all(|r| r.len() == 2 && r[1] >= 0.0 && r[1] <= cfg.e_max * (1.0 + 1e-12)));
    assert!(pump.windows(2).all(|w| w[1][0] > w[0][0]));

    let (h, mode) = read_csv(&d.join("mode.csv"));
    assert_eq!(h, "tau,re,im");
    assert_eq!(mode.len(), cfg.ntau);
    let norm: f64 = mode.iter().map(|r| r[1] * r[1] + r[2] * r[2]).sum::<f64>() * cfg.dtau;
    assert!((norm - 1.0).abs() < 0.02, "mode norm {norm}");

    let (h, spectrum) = read_csv(&d.join("spectrum.csv"));
    assert_eq!(h, "index,eigenvalue");
    assert!(spectrum.windows(2).all(|w| w[1][1] <= w[0][1]));

    let (h, amps) = read_csv(&d.join("amplitudes.csv"));
    assert_eq!(h, "a1_re,a1_im,a2_re,a2_im");
    assert_eq!(amps.len(), cfg.n_traj);

    let (h, hist) = read_csv(&d.join("histogram.csv"));
    assert_eq!(h, "x_edge,p_edge,count");
    let total: f64 = hist.iter().map(|r| r[2]).sum();
    assert_eq!(total as usize, cfg.n_traj);
    assert!(hist.iter().all(|r| r[2] >= 0.0 && r[2].fract() == 0.0));

    let (h, scatter) = read_csv(&d.join("scatter.csv"));
    assert_eq!(h, "x,p");
    assert_eq!(scatter.len(), cfg.n_traj.min(SCATTER_POINTS));

    let spins = fs::read_to_string(d.join("spin_moments.jsonl")).unwrap();
    let stages: Vec<String> = spins
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages, ["initial", "squeezed", "rotated"]);
}

#[test]
fn plot_data_reproduces_run_outputs() {
    let cfg = small();
    let (run, plot) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = run_full(&cfg, run.path(), OpticsOptions::default()).unwrap();
    let arts = plot_data(run.path(), plot.path(), HistogramSpec::default(), SCATTER_POINTS, cfg.seed).unwrap();
    for a in arts {
        assert_eq!(m.hash_of(&a.file), Some(a.sha256.as_str()), "{}", a.file);
    }
}

#[test]
fn damaged_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    run_squeeze(&small(), dir.path()).unwrap();
    let path = dir.path().join("checkpoint.bin");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    let err = run_optics(&path, dir.path(), OpticsOptions::default()).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
}
