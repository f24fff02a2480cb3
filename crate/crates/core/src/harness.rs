//! Pipeline orchestration: the squeezing and optical stages as composable
//! steps with reproducible seeds and hashed artifact files.
//!
//! Artifacts of the squeezing stage: `checkpoint.bin`, `spin_moments.jsonl`.
//! Artifacts of the optical stage: `pump.csv`, `mode.csv`,
//! `classical_mode.csv`, `spectrum.csv`, `amplitudes.csv`, `histogram.csv`,
//! `scatter.csv`, `quadrature.json`, `optics.json`. Every run also writes
//! `manifest.json` listing each artifact with its SHA-256.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint::Checkpoint;
use crate::config::SimulationConfig;
use crate::dicke::poisson_dicke_oracle;
use crate::dynamics::{evolve_squeeze, mean_field_density, two_mode_evolve, DriftDiffusionSpec};
use crate::ensemble::{init_ensemble, mean_density};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::Grid1D;
use crate::ground_state::ground_state;
use crate::modes::{g1_kernel, kl_decompose, mode_overlap, ModeDecomposition, ModeFunction};
use crate::quadrature::{
    histogram, moments, project_all, scatter, Histogram, HistogramSpec, ModeAmplitudePair, QuadratureSummary,
    SCATTER_POINTS,
};
use crate::raman::{check_linearization, DetectorFieldPair, FdSettings, OpticalStage};
use crate::spin::{rotate, spin_moments, squeezing_parameter, two_mode_spin_moments, SpinMoments, SpinState};
use crate::stats::Estimate;
use crate::C64;

// Offsets that give each bootstrap its own stream family.
const SPIN_BOOTSTRAP: u64 = 0x5350_494e;
const LIGHT_BOOTSTRAP: u64 = 0x4c49_4748;
const SCATTER_SEED: u64 = 0x5343_4154;

/// Spin moments at one point of the squeezing stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpinRecord {
    pub stage: String,
    pub moments: SpinMoments,
    /// `N Var_min / |<J>|^2`; absent when the mean spin vanishes.
    pub squeezing: Option<Estimate>,
}

fn spin_record(stage: &str, ensemble: &[crate::PPlusTrajectory], cfg: &SimulationConfig) -> Result<SpinRecord> {
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let moments = spin_moments(ensemble, &grid, cfg.seed ^ SPIN_BOOTSTRAP)?;
    let squeezing = squeezing_parameter(&moments, cfg.atom_number).ok();
    Ok(SpinRecord {
        stage: stage.to_string(),
        moments,
        squeezing,
    })
}

#[derive(Clone, Debug)]
pub struct SqueezeStage {
    pub checkpoint: Checkpoint,
    /// `initial`, `squeezed` and `rotated` records.
    pub spin: Vec<SpinRecord>,
    pub seconds: f64,
}

/// Ground state, coherent initial ensemble, collisional squeezing for
/// `t_sq` and the output-coupling rotation.
pub fn squeeze_stage(cfg: &SimulationConfig) -> Result<SqueezeStage> {
    cfg.validate()?;
    let start = Instant::now();
    let gs = ground_state(cfg)?;
    info!(
        "ground state: mu = {:.6}, residual {:.2e} after {} iterations",
        gs.chemical_potential, gs.residual, gs.iterations
    );
    let ensemble = init_ensemble(cfg, &gs.phi)?;
    let mut spin = vec![spin_record("initial", &ensemble, cfg)?];
    let spec = DriftDiffusionSpec::from_config(cfg);
    let out = evolve_squeeze(ensemble, cfg, &spec)?;
    info!(
        "squeezing: {} steps, {} of {} trajectories discarded",
        out.steps,
        out.discarded.len(),
        cfg.n_traj
    );
    if out.ensemble.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: out.ensemble.len(),
        });
    }
    spin.push(spin_record("squeezed", &out.ensemble, cfg)?);
    let rotated = rotate(out.ensemble, cfg.theta);
    spin.push(spin_record("rotated", &rotated, cfg)?);
    Ok(SqueezeStage {
        checkpoint: Checkpoint {
            config: cfg.clone(),
            ensemble: rotated,
            discarded: out.discarded,
            steps: out.steps,
        },
        spin,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Settings of the optical stage that are not physics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticsOptions {
    /// Trajectories re-propagated with the finite-difference solver.
    pub cross_check: usize,
    /// Finite-difference resolution; converged settings for the grid when
    /// `None`.
    pub fd: Option<FdSettings>,
    /// Leading Karhunen-Loeve modes kept.
    pub kl_modes: usize,
    pub histogram: HistogramSpec,
    pub scatter_points: usize,
}

impl Default for OpticsOptions {
    fn default() -> Self {
        OpticsOptions {
            cross_check: 2,
            fd: None,
            kl_modes: 4,
            histogram: HistogramSpec::default(),
            scatter_points: SCATTER_POINTS,
        }
    }
}

/// Agreement of the finite-difference and Bessel-kernel fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverCrossCheck {
    pub trajectories: usize,
    pub max_rel_l2: f64,
}

/// Light excess variance `Var_min(X) - 1/2` against the atomic
/// `(xi^2 - 1) / 2`, both from the same ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingCheck {
    pub light_excess: Estimate,
    pub atomic_excess: Estimate,
    pub sigma_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpticsSummary {
    pub n_traj: usize,
    pub linearization_b_fraction: f64,
    /// Relative L1 distance between the sampled ensemble-mean density and
    /// the mean-field density that drives the optical kernel.
    pub density_sampling_deviation: f64,
    pub leading_fraction: f64,
    pub eigenvalues_head: Vec<f64>,
    pub kernel_trace: f64,
    pub kernel_asymmetry: f64,
    /// `|<KL leading mode | expected mode>|^2`.
    pub mode_overlap: f64,
    pub cross_check: Option<SolverCrossCheck>,
    pub atomic: SpinRecord,
    pub mapping: Option<MappingCheck>,
    pub min_variance: f64,
    pub min_variance_error: f64,
    pub squeezing_factor: f64,
}

pub struct OpticsStage {
    pub stage: OpticalStage,
    pub fields: Vec<DetectorFieldPair>,
    pub expected_mode: ModeFunction,
    pub decomposition: ModeDecomposition,
    pub amplitudes: Vec<ModeAmplitudePair>,
    pub quadrature: QuadratureSummary,
    pub histogram: Histogram,
    pub scatter: Vec<(f64, f64)>,
    pub summary: OpticsSummary,
    pub seconds: f64,
}

fn relative_l1(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = b.iter().map(|y| y.abs()).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Emission, mode analysis and quadrature statistics for a rotated
/// ensemble. The optical kernel is built on the mean-field density and the
/// projection mode is the normalized classical solution for a uniform
/// per-atom dipole.
pub fn optics_stage(ckpt: &Checkpoint, opts: OpticsOptions) -> Result<OpticsStage> {
    let start = Instant::now();
    let cfg = &ckpt.config;
    let ensemble = &ckpt.ensemble;
    if ensemble.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: ensemble.len(),
        });
    }
    let grid = Grid1D::centered(cfg.nz, cfg.dz);
    let b_fraction = check_linearization(ensemble, &grid);
    let gs = ground_state(cfg)?;
    let density = mean_field_density(cfg, &gs.phi)?;
    let density_sampling_deviation = relative_l1(&mean_density(ensemble), &density);
    let stage = OpticalStage::from_config(cfg, &grid, &density)?;
    let fields: Vec<DetectorFieldPair> = exec::map_slice(ensemble, |_, t| stage.analytic_field(t));

    let cross_check = if opts.cross_check > 0 {
        let k = opts.cross_check.min(ensemble.len());
        let settings = opts.fd.unwrap_or_else(|| FdSettings::converged(stage.grid.step));
        let errs = (0..k)
            .map(|i| {
                let fd = stage.fd_field(&ensemble[i], settings)?;
                Ok(rel_l2(&fd.e1, &fields[i].e1).max(rel_l2(&fd.e2, &fields[i].e2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        Some(SolverCrossCheck {
            trajectories: k,
            max_rel_l2: errs.iter().copied().fold(0.0, f64::max),
        })
    } else {
        None
    };

    let expected_mode = ModeFunction::normalized(stage.tau(), &stage.expected_mode())?;
    let kernel = g1_kernel(stage.tau(), &fields)?;
    let decomposition = kl_decompose(&kernel, opts.kl_modes.max(1))?;
    if decomposition.trace <= 0.0 {
        warn!("emitted pulse carries no photons; the mode spectrum is empty");
    }
    let overlap = mode_overlap(decomposition.leading(), &expected_mode)?;

    let amplitudes = project_all(&fields, &expected_mode)?;
    let quadrature = moments(&amplitudes, cfg.seed ^ LIGHT_BOOTSTRAP)?;
    let hist = histogram(&amplitudes, opts.histogram)?;
    let scatter_pts = scatter(&amplitudes, opts.scatter_points, cfg.seed ^ SCATTER_SEED);

    let atomic = spin_record("rotated", ensemble, cfg)?;
    let mapping = atomic.squeezing.map(|xi| {
        let light_excess = Estimate::new(quadrature.min_variance - 0.5, quadrature.min_variance_error);
        let atomic_excess = Estimate::new(0.5 * (xi.value - 1.0), 0.5 * xi.std_error);
        MappingCheck {
            sigma_distance: light_excess.sigma_distance(atomic_excess.value, atomic_excess.std_error),
            light_excess,
            atomic_excess,
        }
    });

    let summary = OpticsSummary {
        n_traj: ensemble.len(),
        linearization_b_fraction: b_fraction,
        density_sampling_deviation,
        leading_fraction: decomposition.leading_fraction,
        eigenvalues_head: decomposition.eigenvalues.iter().take(8).copied().collect(),
        kernel_trace: decomposition.trace,
        kernel_asymmetry: kernel.asymmetry,
        mode_overlap: overlap,
        cross_check,
        atomic,
        mapping,
        min_variance: quadrature.min_variance,
        min_variance_error: quadrature.min_variance_error,
        squeezing_factor: quadrature.squeezing_factor(),
    };
    Ok(OpticsStage {
        stage,
        fields,
        expected_mode,
        decomposition,
        amplitudes,
        quadrature,
        histogram: hist,
        scatter: scatter_pts,
        summary,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Inputs, timings and hashed outputs of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub command: String,
    pub config: String,
    pub config_hash: String,
    pub seed: u64,
    pub n_traj: usize,
    pub discarded: usize,
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    fn new(command: &str, cfg: &SimulationConfig) -> Self {
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: cfg.to_toml(),
            config_hash: format!("{:016x}", cfg.hash64()),
            seed: cfg.seed,
            n_traj: cfg.n_traj,
            discarded: 0,
            timings: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    fn record(&mut self, dir: &Path, file: &str) -> Result<()> {
        let path = dir.join(file);
        self.artifacts.push(Artifact {
            file: file.to_string(),
            sha256: sha256_file(&path)?,
            bytes: fs::metadata(&path)?.len(),
        });
        Ok(())
    }

    pub fn hash_of(&self, file: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.file == file).map(|a| a.sha256.as_str())
    }

    fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

fn write_squeeze(dir: &Path, sq: &SqueezeStage, manifest: &mut RunManifest) -> Result<()> {
    sq.checkpoint.save(&dir.join("checkpoint.bin"))?;
    manifest.record(dir, "checkpoint.bin")?;
    let mut w = std::io::BufWriter::new(fs::File::create(dir.join("spin_moments.jsonl"))?);
    for r in &sq.spin {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    drop(w);
    manifest.record(dir, "spin_moments.jsonl")?;
    manifest.discarded = sq.checkpoint.discarded.len();
    manifest.timings.insert("squeeze".into(), sq.seconds);
    Ok(())
}

fn complex_rows<'a>(tau: &'a [f64], v: &'a [C64]) -> impl Iterator<Item = Vec<String>> + 'a {
    tau.iter().zip(v).map(|(t, z)| vec![fmt_f64(*t), fmt_f64(z.re), fmt_f64(z.im)])
}

fn write_histogram(dir: &Path, h: &Histogram) -> Result<()> {
    let bp = h.bins_p();
    let rows = h.counts.iter().enumerate().map(|(k, c)| {
        let (ix, ip) = (k / bp, k % bp);
        vec![fmt_f64(h.x_edges[ix]), fmt_f64(h.p_edges[ip]), c.to_string()]
    });
    write_csv(&dir.join("histogram.csv"), "x_edge,p_edge,count", rows)
}

fn write_scatter(dir: &Path, pts: &[(f64, f64)]) -> Result<()> {
    write_csv(
        &dir.join("scatter.csv"),
        "x,p",
        pts.iter().map(|(x, p)| vec![fmt_f64(*x), fmt_f64(*p)]),
    )
}

fn write_optics(dir: &Path, op: &OpticsStage, manifest: &mut RunManifest) -> Result<()> {
    let tau = &op.stage.tau().points;
    write_csv(
        &dir.join("pump.csv"),
        "tau,e_s",
        tau.iter().zip(&op.stage.pump.values).map(|(t, e)| vec![fmt_f64(*t), fmt_f64(*e)]),
    )?;
    write_csv(&dir.join("mode.csv"), "tau,re,im", complex_rows(tau, &op.decomposition.leading().values))?;
    write_csv(&dir.join("classical_mode.csv"), "tau,re,im", complex_rows(tau, &op.expected_mode.values))?;
    write_csv(
        &dir.join("spectrum.csv"),
        "index,eigenvalue",
        op.decomposition.eigenvalues.iter().enumerate().map(|(k, l)| vec![k.to_string(), fmt_f64(*l)]),
    )?;
    write_csv(
        &dir.join("amplitudes.csv"),
        "a1_re,a1_im,a2_re,a2_im",
        op.amplitudes
            .iter()
            .map(|a| vec![fmt_f64(a.a1.re), fmt_f64(a.a1.im), fmt_f64(a.a2.re), fmt_f64(a.a2.im)]),
    )?;
    write_histogram(dir, &op.histogram)?;
    write_scatter(dir, &op.scatter)?;
    write_json(&dir.join("quadrature.json"), &op.quadrature)?;
    write_json(&dir.join("optics.json"), &op.summary)?;
    for f in [
        "pump.csv",
        "mode.csv",
        "classical_mode.csv",
        "spectrum.csv",
        "amplitudes.csv",
        "histogram.csv",
        "scatter.csv",
        "quadrature.json",
        "optics.json",
    ] {
        manifest.record(dir, f)?;
    }
    manifest.timings.insert("optics".into(), op.seconds);
    Ok(())
}

pub fn run_squeeze(cfg: &SimulationConfig, out_dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let sq = squeeze_stage(cfg)?;
    let mut manifest = RunManifest::new("squeeze", cfg);
    write_squeeze(out_dir, &sq, &mut manifest)?;
    manifest.save(out_dir)?;
    Ok(manifest)
}

pub fn run_optics(checkpoint: &Path, out_dir: &Path, opts: OpticsOptions) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let op = optics_stage(&ckpt, opts)?;
    let mut manifest = RunManifest::new("optics", &ckpt.config);
    manifest.discarded = ckpt.discarded.len();
    write_optics(out_dir, &op, &mut manifest)?;
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Both stages in one process, sharing the in-memory checkpoint.
pub fn run_full(cfg: &SimulationConfig, out_dir: &Path, opts: OpticsOptions) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let sq = squeeze_stage(cfg)?;
    let mut manifest = RunManifest::new("full", cfg);
    write_squeeze(out_dir, &sq, &mut manifest)?;
    let op = optics_stage(&sq.checkpoint, opts)?;
    write_optics(out_dir, &op, &mut manifest)?;
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// One compared quantity of the two-mode oracle run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub quantity: String,
    pub simulated: f64,
    pub std_error: f64,
    pub exact: f64,
    pub sigma_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub atom_number: f64,
    pub chi_t: f64,
    pub n_traj: usize,
    pub discarded: usize,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn max_sigma(&self) -> f64 {
        self.rows.iter().map(|r| r.sigma_distance).fold(0.0, f64::max)
    }
}

/// Two-mode positive-P against the exact Dicke-basis result for a
/// Poisson-distributed atom number, with `chi = 1`.
pub fn run_oracle(atom_number: f64, chi_t: f64, n_traj: usize, seed: u64) -> Result<OracleReport> {
    let out = two_mode_evolve(atom_number, 1.0, chi_t, n_traj, seed)?;
    let m = two_mode_spin_moments(&out.samples, seed ^ SPIN_BOOTSTRAP)?;
    let exact: SpinState = poisson_dicke_oracle(atom_number, 1.0, chi_t);
    let mut rows = Vec::new();
    let mut push = |q: String, sim: f64, err: f64, ex: f64| {
        rows.push(OracleRow {
            sigma_distance: Estimate::new(sim, err).sigma_distance(ex, 0.0),
            quantity: q,
            simulated: sim,
            std_error: err,
            exact: ex,
        });
    };
    let axes = ["x", "y", "z"];
    for i in 0..3 {
        push(format!("<J{}>", axes[i]), m.state.mean[i], m.mean_error[i], exact.mean[i]);
    }
    for i in 0..3 {
        for j in i..3 {
            push(
                format!("<J{}J{}>", axes[i], axes[j]),
                m.state.second[i][j],
                m.second_error[i][j],
                exact.second[i][j],
            );
        }
    }
    push(
        "Var_min".into(),
        m.transverse.min_variance,
        m.min_variance_error,
        exact.transverse().min_variance,
    );
    if let (Ok(xi), Some(ex)) = (squeezing_parameter(&m, atom_number), exact.squeezing(atom_number)) {
        push("xi^2".into(), xi.value, xi.std_error, ex);
    }
    Ok(OracleReport {
        atom_number,
        chi_t,
        n_traj,
        discarded: out.discarded,
        rows,
    })
}

fn read_amplitudes(path: &Path) -> Result<Vec<ModeAmplitudePair>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("a1_re,a1_im,a2_re,a2_im") {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    lines
        .enumerate()
        .map(|(k, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), k + 2)))?;
            if v.len() != 4 {
                return Err(Error::Parse(format!("{} line {}: expected 4 columns", path.display(), k + 2)));
            }
            Ok(ModeAmplitudePair {
                a1: C64::new(v[0], v[1]),
                a2: C64::new(v[2], v[3]),
            })
        })
        .collect()
}

/// Regenerates the figure inputs of an optics run in `out_dir`: copies
/// `pump.csv` and `mode.csv` and rebuilds `histogram.csv` and `scatter.csv`
/// from `amplitudes.csv` with the given binning.
pub fn plot_data(
    run_dir: &Path,
    out_dir: &Path,
    spec: HistogramSpec,
    scatter_points: usize,
    seed: u64,
) -> Result<Vec<Artifact>> {
    fs::create_dir_all(out_dir)?;
    let amps = read_amplitudes(&run_dir.join("amplitudes.csv"))?;
    let h = histogram(&amps, spec)?;
    write_histogram(out_dir, &h)?;
    write_scatter(out_dir, &scatter(&amps, scatter_points, seed ^ SCATTER_SEED))?;
    let same = run_dir.canonicalize()? == out_dir.canonicalize()?;
    for f in ["pump.csv", "mode.csv"] {
        if !same {
            fs::copy(run_dir.join(f), out_dir.join(f))?;
        }
    }
    ["pump.csv", "mode.csv", "histogram.csv", "scatter.csv"]
        .iter()
        .map(|f| {
            let p = out_dir.join(f);
            Ok(Artifact {
                file: f.to_string(),
                sha256: sha256_file(&p)?,
                bytes: fs::metadata(&p)?.len(),
            })
        })
        .collect()
}
