//! Binary ensemble checkpoint passed from the squeezing stage to the
//! optical stage.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "SPLNCKPT"
//! version      u32
//! config hash  u64      SimulationConfig::hash64 of the embedded config
//! config len   u64, then that many bytes of canonical TOML
//! nz           u64
//! n_traj       u64      stored trajectories
//! discarded    u64, then that many u64 indices
//! steps        u64      squeezing steps taken
//! seeds        n_traj x u64
//! fields       n_traj x [a1, a2, b1, b2] x nz x (re f64, im f64)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::config::SimulationConfig;
use crate::ensemble::PPlusTrajectory;
use crate::error::{Error, Result};
use crate::C64;

pub const MAGIC: &[u8; 8] = b"SPLNCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: SimulationConfig,
    pub ensemble: Vec<PPlusTrajectory>,
    /// Indices of trajectories dropped for divergence.
    pub discarded: Vec<usize>,
    pub steps: usize,
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_field(r: &mut impl Read, nz: usize) -> Result<Vec<C64>> {
    (0..nz).map(|_| Ok(C64::new(get_f64(r)?, get_f64(r)?))).collect()
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Checkpoint("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Guards against absurd lengths in a corrupt header before allocating.
fn bounded(v: u64, limit: u64, what: &str) -> Result<usize> {
    if v > limit {
        return Err(Error::Checkpoint(format!("{what} = {v} is implausible")));
    }
    Ok(v as usize)
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let toml = self.config.to_toml();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        put_u64(w, self.config.hash64())?;
        put_u64(w, toml.len() as u64)?;
        w.write_all(toml.as_bytes())?;
        let nz = self.ensemble.first().map_or(self.config.nz, |t| t.len());
        put_u64(w, nz as u64)?;
        put_u64(w, self.ensemble.len() as u64)?;
        put_u64(w, self.discarded.len() as u64)?;
        for &d in &self.discarded {
            put_u64(w, d as u64)?;
        }
        put_u64(w, self.steps as u64)?;
        for t in &self.ensemble {
            put_u64(w, t.seed)?;
        }
        for t in &self.ensemble {
            if t.len() != nz {
                return Err(Error::Checkpoint(format!("trajectory has {} points, expected {nz}", t.len())));
            }
            for field in [&t.a1, &t.a2, &t.b1, &t.b2] {
                for v in field {
                    put_u64(w, v.re.to_bits())?;
                    put_u64(w, v.im.to_bits())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not an ensemble checkpoint (bad magic)".into()));
        }
        let mut vb = [0u8; 4];
        r.read_exact(&mut vb).map_err(truncated)?;
        let version = u32::from_le_bytes(vb);
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint version {version} is not supported (expected {VERSION})"
            )));
        }
        let hash = get_u64(r)?;
        let len = bounded(get_u64(r)?, 1 << 20, "config length")?;
        let mut toml = vec![0u8; len];
        r.read_exact(&mut toml).map_err(truncated)?;
        let toml = String::from_utf8(toml).map_err(|_| Error::Checkpoint("embedded config is not UTF-8".into()))?;
        let config = SimulationConfig::from_toml_str(&toml)?;
        if config.hash64() != hash {
            return Err(Error::Checkpoint("embedded config does not match its hash".into()));
        }
        let nz = bounded(get_u64(r)?, 1 << 24, "nz")?;
        let n_traj = bounded(get_u64(r)?, 1 << 32, "trajectory count")?;
        let n_disc = bounded(get_u64(r)?, 1 << 32, "discard count")?;
        let discarded = (0..n_disc).map(|_| get_u64(r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let steps = get_u64(r)? as usize;
        let seeds = (0..n_traj).map(|_| get_u64(r)).collect::<Result<Vec<_>>>()?;
        let mut ensemble = Vec::with_capacity(n_traj);
        for seed in seeds {
            let a1 = get_field(r, nz)?;
            let a2 = get_field(r, nz)?;
            let b1 = get_field(r, nz)?;
            let b2 = get_field(r, nz)?;
            ensemble.push(PPlusTrajectory { a1, a2, b1, b2, seed });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Checkpoint("trailing bytes after ensemble".into()));
        }
        Ok(Checkpoint {
            config,
            ensemble,
            discarded,
            steps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let cfg = SimulationConfig {
            nz: 16,
            dz: 0.8,
            n_traj: 2,
            ..Default::default()
        };
        let f = |s: f64| (0..16).map(|k| C64::new(s + k as f64, -s * 0.1)).collect::<Vec<_>>();
        let t = |s: f64| PPlusTrajectory {
            a1: f(s),
            a2: f(s + 1.0),
            b1: f(s + 2.0),
            b2: f(s + 3.0),
            seed: s as u64,
        };
        Checkpoint {
            config: cfg,
            ensemble: vec![t(1.0), t(7.0)],
            discarded: vec![5],
            steps: 300,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        buf[8] = 9;
        let err = Checkpoint::read_from(&mut buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version 9"), "{err}");
    }

    #[test]
    fn corruption_is_detected() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Checkpoint::read_from(&mut bad.as_slice()).is_err());
        let short = &buf[..buf.len() - 3];
        assert!(Checkpoint::read_from(&mut &short[..]).is_err());
        let mut hashed = buf.clone();
        hashed[12] ^= 1;
        assert!(Checkpoint::read_from(&mut hashed.as_slice()).is_err());
    }
}
