use std::fs;
use std::process::{Command, Output};

fn spinlight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinlight"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const SMALL: &str = "[grid]\nnz = 64\ndz = 0.16\n[squeeze]\nt = 0.2\n[ensemble]\nn_traj = 8\n";

#[test]
fn help_lists_every_subcommand() {
    let o = spinlight(&["--help"]);
    assert!(o.status.success());
    let t = text(&o);
    for sub in ["squeeze", "optics", "full", "oracle", "plot-data"] {
        assert!(t.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn unknown_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nnz = 64\nwidth = 3\n").unwrap();
    let o = spinlight(&["squeeze", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("grid.width"), "{}", text(&o));
}

#[test]
fn staged_commands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = spinlight(&["squeeze", "--config", cfg.to_str().unwrap(), "--out-dir", out_s]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("checkpoint.bin").exists());

    let o = spinlight(&["optics", "--out-dir", out_s, "--seed", "3"]);
    assert!(!o.status.success(), "optics must not accept a seed override");

    let o = spinlight(&["optics", "--out-dir", out_s, "--cross-check", "0"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("min variance"));
    for f in ["pump.csv", "mode.csv", "histogram.csv", "scatter.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let figs = dir.path().join("figs");
    let o = spinlight(&["plot-data", "--in-dir", out_s, "--out-dir", figs.to_str().unwrap(), "--bins", "21"]);
    assert!(o.status.success(), "{}", text(&o));
    let hist = fs::read_to_string(figs.join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 21 * 21);
}

#[test]
fn oracle_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinlight(&["oracle", "--n-traj", "400", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(report["n_traj"], 400);
    assert!(!report["rows"].as_array().unwrap().is_empty());
}

#[test]
fn zero_threads_is_rejected() {
    let o = spinlight(&["--threads", "0", "oracle"]);
    assert!(!o.status.success());
}
