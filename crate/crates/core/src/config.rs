//! Run configuration.
//!
//! Two dimensionless unit systems are in play. The squeezing stage uses
//! trap units: `hbar = 1`, time in `1/Omega`, length in
//! `l0 = sqrt(hbar / m Omega)`, interaction strengths in `hbar Omega l0`.
//! The optical stage uses retarded time in `l0/c`, fields in
//! `sqrt(2 pi hbar omega_q / l0)` and the coupling `kappa1` in
//! `c / (2 pi hbar omega_q)`. In these units `kappa2 = kappa1` numerically,
//! so the gain rate `kappa1 kappa2 |E_max|^2` is `kappa1^2 E_max^2`.
//!
//! The file format is TOML with flat dotted keys, e.g. `atoms.N = 2000`.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::NoiseFactorization;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Mean total atom number.
    pub atom_number: f64,
    pub g_aa: f64,
    pub g_ab: f64,
    pub g_bb: f64,
    /// Duration of the collisional squeezing, `1/Omega`.
    pub squeeze_time: f64,
    /// Time step of the squeezing integrator, `1/Omega`.
    pub squeeze_dt: f64,
    pub factorization: NoiseFactorization,
    /// Angle of the output-coupling rotation, radians.
    pub theta: f64,
    pub e_max: f64,
    pub t_rise: f64,
    pub kappa1: f64,
    pub nz: usize,
    pub dz: f64,
    pub ntau: usize,
    pub dtau: f64,
    /// Fourier refinement factor of the z-grid used by the optical stage.
    pub z_refine: usize,
    pub n_traj: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            atom_number: 2000.0,
            g_aa: 1.0 * 5e-3,
            g_ab: 0.5 * 5e-3,
            g_bb: 1.0 * 5e-3,
            squeeze_time: 3.0,
            squeeze_dt: 1e-3,
            factorization: NoiseFactorization::Cholesky,
            theta: FRAC_PI_2,
            e_max: 1e2,
            t_rise: 100.0,
            kappa1: 1e-3,
            nz: 256,
            dz: 0.05,
            ntau: 512,
            dtau: 0.5,
            z_refine: 4,
            n_traj: 10_000,
            seed: 1,
        }
    }
}

const KEYS: &[&str] = &[
    "atoms.N",
    "atoms.g_aa",
    "atoms.g_ab",
    "atoms.g_bb",
    "squeeze.t",
    "squeeze.dt",
    "squeeze.noise",
    "rotate.theta",
    "pump.e_max",
    "pump.t_rise",
    "optics.kappa1",
    "optics.z_refine",
    "grid.nz",
    "grid.dz",
    "grid.ntau",
    "grid.dtau",
    "ensemble.n_traj",
    "ensemble.seed",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(key, "expected a non-negative integer")),
    }
}

impl SimulationConfig {
    /// Parse a config file body. Keys that are absent keep their defaults.
    pub fn from_toml_str(source: &str) -> Result<Self> {
        let table: toml::Table = source.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);

        let mut cfg = SimulationConfig::default();
        for (key, value) in &flat {
            let k = key.as_str();
            match k {
                "atoms.N" => cfg.atom_number = as_f64(k, value)?,
                "atoms.g_aa" => cfg.g_aa = as_f64(k, value)?,
                "atoms.g_ab" => cfg.g_ab = as_f64(k, value)?,
                "atoms.g_bb" => cfg.g_bb = as_f64(k, value)?,
                "squeeze.t" => cfg.squeeze_time = as_f64(k, value)?,
                "squeeze.dt" => cfg.squeeze_dt = as_f64(k, value)?,
                "squeeze.noise" => {
                    let s = value
                        .as_str()
                        .ok_or_else(|| Error::config(k, "expected a string"))?;
                    cfg.factorization = s.parse().map_err(|e: String| Error::config(k, e))?;
                }
                "rotate.theta" => cfg.theta = as_f64(k, value)?,
                "pump.e_max" => cfg.e_max = as_f64(k, value)?,
                "pump.t_rise" => cfg.t_rise = as_f64(k, value)?,
                "optics.kappa1" => cfg.kappa1 = as_f64(k, value)?,
                "optics.z_refine" => cfg.z_refine = as_usize(k, value)?,
                "grid.nz" => cfg.nz = as_usize(k, value)?,
                "grid.dz" => cfg.dz = as_f64(k, value)?,
                "grid.ntau" => cfg.ntau = as_usize(k, value)?,
                "grid.dtau" => cfg.dtau = as_f64(k, value)?,
                "ensemble.n_traj" => cfg.n_traj = as_usize(k, value)?,
                "ensemble.seed" => {
                    cfg.seed = match value {
                        toml::Value::Integer(i) if *i >= 0 => *i as u64,
                        _ => return Err(Error::config(k, "expected a non-negative integer")),
                    }
                }
                _ => {
                    return Err(Error::config(
                        k,
                        format!("unknown key (known keys: {})", KEYS.join(", ")),
                    ))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Canonical text form. Floats use the shortest round-trip
    /// representation, so `from_toml_str(to_toml())` is exact.
    pub fn to_toml(&self) -> String {
        let f = |x: f64| format!("{x:?}");
        let lines = [
            ("atoms.N", f(self.atom_number)),
            ("atoms.g_aa", f(self.g_aa)),
            ("atoms.g_ab", f(self.g_ab)),
            ("atoms.g_bb", f(self.g_bb)),
            ("squeeze.t", f(self.squeeze_time)),
            ("squeeze.dt", f(self.squeeze_dt)),
            ("squeeze.noise", format!("\"{}\"", self.factorization)),
            ("rotate.theta", f(self.theta)),
            ("pump.e_max", f(self.e_max)),
            ("pump.t_rise", f(self.t_rise)),
            ("optics.kappa1", f(self.kappa1)),
            ("optics.z_refine", self.z_refine.to_string()),
            ("grid.nz", self.nz.to_string()),
            ("grid.dz", f(self.dz)),
            ("grid.ntau", self.ntau.to_string()),
            ("grid.dtau", f(self.dtau)),
            ("ensemble.n_traj", self.n_traj.to_string()),
            ("ensemble.seed", self.seed.to_string()),
        ];
        let mut s = String::new();
        for (k, v) in lines {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// First eight bytes of the SHA-256 of [`Self::to_toml`].
    pub fn hash64(&self) -> u64 {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    pub fn kappa2(&self) -> f64 {
        // kappa2 = 2 pi hbar omega_q kappa1 / c, which is kappa1 in program units
        self.kappa1
    }

    /// `kappa1 kappa2 E_max^2`, the late-time slope of the gain integral.
    pub fn gain_rate(&self) -> f64 {
        self.kappa1 * self.kappa2() * self.e_max * self.e_max
    }

    /// Thomas-Fermi chemical potential of the fully `a`-polarized cloud,
    /// `(3 g N / (4 sqrt 2))^(2/3)`.
    pub fn thomas_fermi_mu(&self) -> f64 {
        (3.0 * self.g_aa * self.atom_number / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("atoms.N", self.atom_number),
            ("pump.e_max", self.e_max),
            ("pump.t_rise", self.t_rise),
            ("optics.kappa1", self.kappa1),
            ("grid.dz", self.dz),
            ("grid.dtau", self.dtau),
            ("squeeze.dt", self.squeeze_dt),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("atoms.g_aa", self.g_aa),
            ("atoms.g_ab", self.g_ab),
            ("atoms.g_bb", self.g_bb),
            ("squeeze.t", self.squeeze_time),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be non-negative, got {v}")));
            }
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(Error::config("rotate.theta", "must lie in [0, pi]"));
        }
        if self.nz < 16 || self.nz % 2 != 0 {
            return Err(Error::config("grid.nz", "must be even and at least 16"));
        }
        if self.ntau < 2 {
            return Err(Error::config("grid.ntau", "must be at least 2"));
        }
        if self.n_traj == 0 {
            return Err(Error::config("ensemble.n_traj", "must be at least 1"));
        }
        // TOML integers are signed 64-bit
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("ensemble.seed", format!("must be at most {}", i64::MAX)));
        }
        if self.z_refine == 0 {
            return Err(Error::config("optics.z_refine", "must be at least 1"));
        }
        let mu = self.thomas_fermi_mu().max(0.5);
        let radius = (2.0 * mu).sqrt();
        let healing = 1.0 / (2.0 * mu).sqrt();
        let needed = radius + 5.0 * healing;
        let half_box = 0.5 * self.nz as f64 * self.dz;
        if half_box < needed {
            return Err(Error::config(
                "grid.nz",
                format!(
                    "box half-width {half_box:.3} l0 is smaller than the cloud radius plus five healing lengths ({needed:.3} l0); raise grid.nz or grid.dz"
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_gives_defaults() {
        let cfg = SimulationConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimulationConfig::default());
        assert_eq!(cfg.atom_number, 2000.0);
        assert_eq!((cfg.g_aa, cfg.g_ab, cfg.g_bb), (5e-3, 2.5e-3, 5e-3));
        assert_eq!(cfg.squeeze_time, 3.0);
        assert_eq!(cfg.kappa1, 1e-3);
        assert_eq!(cfg.e_max, 100.0);
        assert_eq!(cfg.t_rise, 100.0);
        assert_eq!(cfg.theta, FRAC_PI_2);
    }

    #[test]
    fn negative_cross_coupling_is_rejected() {
        let err = SimulationConfig::from_toml_str("atoms.g_ab = -0.1").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "atoms.g_ab"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn table_and_dotted_forms_agree() {
        let a = SimulationConfig::from_toml_str("[atoms]\nN = 500\n[grid]\nnz = 128\ndz = 0.1").unwrap();
        let b = SimulationConfig::from_toml_str("atoms.N = 500\ngrid.nz = 128\ngrid.dz = 0.1").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.atom_number, 500.0);
    }

    #[test]
    fn unknown_and_mistyped_keys_fail() {
        assert!(matches!(
            SimulationConfig::from_toml_str("atoms.n = 3"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            SimulationConfig::from_toml_str("grid.nz = \"big\""),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            SimulationConfig::from_toml_str("grid.nz = "),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn small_box_is_rejected() {
        let err = SimulationConfig::from_toml_str("grid.nz = 64\ngrid.dz = 0.05").unwrap_err();
        assert!(err.to_string().contains("grid.nz"));
    }

    #[test]
    fn text_form_round_trips() {
        let mut cfg = SimulationConfig::default();
        cfg.theta = 1.4707963267948966;
        cfg.seed = 99;
        let back = SimulationConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash64(), cfg.hash64());
    }

    #[test]
    fn gain_rate_in_program_units() {
        let cfg = SimulationConfig::default();
        assert!((cfg.gain_rate() - 1e-2).abs() < 1e-15);
    }
}
