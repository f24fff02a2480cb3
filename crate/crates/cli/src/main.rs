use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use spinlight::harness::{self, OpticsOptions, RunManifest};
use spinlight::quadrature::{HistogramSpec, SCATTER_POINTS};
use spinlight::SimulationConfig;

/// Spin squeezing of a two-component condensate and Raman transfer of the
/// squeezing to a light pulse, simulated with the positive-P method.
#[derive(Parser, Debug)]
#[command(name = "spinlight", version)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "run")]
    out_dir: PathBuf,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the trajectory count.
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Squeeze and rotate the atomic ensemble; writes checkpoint.bin.
    Squeeze,
    /// Optical stage on a checkpoint.
    Optics {
        /// Defaults to <out-dir>/checkpoint.bin.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Trajectories re-propagated with the finite-difference solver.
        #[arg(long, default_value_t = 2)]
        cross_check: usize,
    },
    /// Both stages in one run.
    Full {
        #[arg(long, default_value_t = 2)]
        cross_check: usize,
    },
    /// Two-mode positive-P against the exact Dicke-basis solution.
    Oracle {
        #[arg(long, default_value_t = 20.0)]
        atoms: f64,
        #[arg(long, default_value_t = 0.05)]
        chi_t: f64,
    },
    /// Rebuild figure inputs from an optics run directory.
    PlotData {
        #[arg(long)]
        in_dir: PathBuf,
        #[arg(long, default_value_t = 101)]
        bins: usize,
        #[arg(long, default_value_t = SCATTER_POINTS)]
        scatter: usize,
    },
}

fn load_config(cli: &Cli) -> Result<SimulationConfig> {
    let mut cfg = match &cli.config {
        Some(p) => SimulationConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => SimulationConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.n_traj {
        cfg.n_traj = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(m: &RunManifest) {
    println!("{} run, config {}", m.command, m.config_hash);
    for (stage, secs) in &m.timings {
        println!("  {stage}: {secs:.2} s");
    }
    if m.discarded > 0 {
        println!("  discarded trajectories: {}", m.discarded);
    }
    for a in &m.artifacts {
        println!("  {}  {}", &a.sha256[..16], a.file);
    }
}

fn print_optics(dir: &std::path::Path) -> Result<()> {
    let text = std::fs::read_to_string(dir.join("optics.json"))?;
    let s: harness::OpticsSummary = serde_json::from_str(&text)?;
    println!(
        "  min variance {:.4} +- {:.4} (factor {:.1} below vacuum)",
        s.min_variance, s.min_variance_error, s.squeezing_factor
    );
    println!(
        "  leading mode fraction {:.4}, overlap with expected mode {:.5}",
        s.leading_fraction, s.mode_overlap
    );
    if let Some(m) = s.mapping {
        println!(
            "  light excess {:.4} +- {:.4} vs atomic {:.4} +- {:.4} ({:.2} sigma)",
            m.light_excess.value,
            m.light_excess.std_error,
            m.atomic_excess.value,
            m.atomic_excess.std_error,
            m.sigma_distance
        );
    }
    Ok(())
}

/// Master seed recorded in a run directory's manifest.
fn run_seed(dir: &std::path::Path) -> Option<u64> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).ok()?;
    let m: RunManifest = serde_json::from_str(&text).ok()?;
    Some(m.seed)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        spinlight::exec::set_threads(n);
    }
    match &cli.command {
        Command::Squeeze => {
            let m = harness::run_squeeze(&load_config(&cli)?, &cli.out_dir)?;
            report(&m);
        }
        Command::Optics { checkpoint, cross_check } => {
            if cli.config.is_some() || cli.seed.is_some() || cli.n_traj.is_some() {
                bail!("optics takes its configuration from the checkpoint");
            }
            let ckpt = checkpoint.clone().unwrap_or_else(|| cli.out_dir.join("checkpoint.bin"));
            let opts = OpticsOptions {
                cross_check: *cross_check,
                ..Default::default()
            };
            let m = harness::run_optics(&ckpt, &cli.out_dir, opts)?;
            report(&m);
            print_optics(&cli.out_dir)?;
        }
        Command::Full { cross_check } => {
            let opts = OpticsOptions {
                cross_check: *cross_check,
                ..Default::default()
            };
            let m = harness::run_full(&load_config(&cli)?, &cli.out_dir, opts)?;
            report(&m);
            print_optics(&cli.out_dir)?;
        }
        Command::Oracle { atoms, chi_t } => {
            let n_traj = cli.n_traj.unwrap_or(10_000);
            let seed = cli.seed.unwrap_or(1);
            let r = harness::run_oracle(*atoms, *chi_t, n_traj, seed)?;
            println!("N = {}, chi t = {}, {} trajectories", r.atom_number, r.chi_t, r.n_traj);
            println!("{:>10} {:>14} {:>10} {:>14} {:>7}", "quantity", "positive-P", "error", "exact", "sigma");
            for row in &r.rows {
                println!(
                    "{:>10} {:>14.6} {:>10.6} {:>14.6} {:>7.2}",
                    row.quantity, row.simulated, row.std_error, row.exact, row.sigma_distance
                );
            }
            std::fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join("oracle.json");
            std::fs::write(&path, serde_json::to_string_pretty(&r)? + "\n")?;
            println!("max deviation {:.2} sigma; report in {}", r.max_sigma(), path.display());
        }
        Command::PlotData { in_dir, bins, scatter } => {
            let spec = HistogramSpec {
                bins_x: *bins,
                bins_p: *bins,
                ..Default::default()
            };
            let seed = match cli.seed {
                Some(s) => s,
                None => run_seed(in_dir).unwrap_or(SimulationConfig::default().seed),
            };
            let arts = harness::plot_data(in_dir, &cli.out_dir, spec, *scatter, seed)?;
            for a in arts {
                println!("{}  {}", &a.sha256[..16], a.file);
            }
        }
    }
    Ok(())
}
