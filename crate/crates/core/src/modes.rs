//! First-order coherence of the emitted pulse and its decomposition into
//! temporal modes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::Grid1D;
use crate::raman::DetectorFieldPair;
use crate::C64;

const ROW_BLOCK: usize = 8;

/// Ensemble estimate of `G(tau', tau) = <E^dag(tau') E(tau)>`, stored
/// row-major with `tau'` as the row index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceKernel {
    pub tau: Grid1D,
    pub n_samples: usize,
    pub raw: Vec<C64>,
    /// `(G + G^dag) / 2`.
    pub hermitian: Vec<C64>,
    /// `|G - G^dag|_F / |G|_F`, a measure of sampling noise.
    pub asymmetry: f64,
}

impl CoherenceKernel {
    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    /// `int G(tau, tau) dtau`, the mean total photon number of the pulse.
    pub fn trace(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|i| self.tau.weights[i] * self.hermitian[i * n + i].re).sum()
    }
}

/// Averages `E2(tau') E1(tau)` over the field pairs. Each matrix element
/// is summed in trajectory order, so the result does not depend on the
/// thread count.
pub fn g1_kernel(tau: &Grid1D, fields: &[DetectorFieldPair]) -> Result<CoherenceKernel> {
    if fields.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if fields.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: fields.len() });
    }
    let n = tau.len();
    if let Some(f) = fields.iter().find(|f| f.e1.len() != n || f.e2.len() != n) {
        return Err(Error::Grid(format!("field has {} samples, tau grid has {n}", f.e1.len())));
    }
    let blocks = n.div_ceil(ROW_BLOCK);
    let inv = 1.0 / fields.len() as f64;
    let rows: Vec<Vec<C64>> = exec::map_range(blocks, |b| {
        let start = b * ROW_BLOCK;
        let end = (start + ROW_BLOCK).min(n);
        let mut acc = vec![C64::new(0.0, 0.0); (end - start) * n];
        for f in fields {
            for (r, row) in acc.chunks_mut(n).enumerate() {
                let left = f.e2[start + r];
                for (g, right) in row.iter_mut().zip(&f.e1) {
                    *g += left * right;
                }
            }
        }
        acc.iter_mut().for_each(|g| *g *= inv);
        acc
    });
    let raw: Vec<C64> = rows.into_iter().flatten().collect();
    Ok(from_raw(tau.clone(), fields.len(), raw))
}

fn from_raw(tau: Grid1D, n_samples: usize, raw: Vec<C64>) -> CoherenceKernel {
    let n = tau.len();
    let mut hermitian = vec![C64::new(0.0, 0.0); n * n];
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let g = raw[i * n + j];
            let gt = raw[j * n + i].conj();
            hermitian[i * n + j] = 0.5 * (g + gt);
            diff += (g - gt).norm_sqr();
            norm += g.norm_sqr();
        }
    }
    let asymmetry = if norm > 0.0 { (diff / norm).sqrt() } else { 0.0 };
    CoherenceKernel {
        tau,
        n_samples,
        raw,
        hermitian,
        asymmetry,
    }
}

/// Kernel of a single classical field, `G(tau', tau) = E*(tau') E(tau)`.
pub fn classical_kernel(tau: &Grid1D, field: &[C64]) -> CoherenceKernel {
    let n = tau.len();
    let mut raw = Vec::with_capacity(n * n);
    for a in field {
        for b in field {
            raw.push(a.conj() * b);
        }
    }
    from_raw(tau.clone(), 1, raw)
}

/// A temporal mode normalized under the `tau` quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub tau: Grid1D,
    pub values: Vec<C64>,
    /// Mean photon number in the mode.
    pub occupancy: f64,
    /// Occupancy relative to the whole pulse.
    pub fraction: f64,
}

impl ModeFunction {
    /// Normalizes `values`; fails on an all-zero profile.
    pub fn normalized(tau: &Grid1D, values: &[C64]) -> Result<Self> {
        let norm: f64 = values.iter().zip(&tau.weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate("mode profile has zero norm".into()));
        }
        Ok(ModeFunction {
            tau: tau.clone(),
            values: values.iter().map(|v| v / norm).collect(),
            occupancy: 0.0,
            fraction: 0.0,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().zip(&self.tau.weights).map(|(v, w)| w * v.norm_sqr()).sum()
    }
}

/// `int conj(m1) m2 dtau`.
pub fn mode_inner(m1: &ModeFunction, m2: &ModeFunction) -> C64 {
    m1.values
        .iter()
        .zip(&m2.values)
        .zip(&m1.tau.weights)
        .map(|((a, b), w)| a.conj() * b * *w)
        .sum()
}

/// `|int conj(m1) m2 dtau|^2`.
pub fn mode_overlap(m1: &ModeFunction, m2: &ModeFunction) -> Result<f64> {
    m1.tau.check_same(&m2.tau, "mode overlap")?;
    Ok(mode_inner(m1, m2).norm_sqr())
}

/// Karhunen-Loeve decomposition of a coherence kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeDecomposition {
    /// All eigenvalues, descending, including small negative sampling
    /// artifacts.
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<ModeFunction>,
    /// Leading eigenvalue over the sum of the non-negative ones.
    pub leading_fraction: f64,
    pub trace: f64,
}

impl ModeDecomposition {
    pub fn leading(&self) -> &ModeFunction {
        &self.modes[0]
    }
}

/// Eigenmodes of the symmetrized kernel, orthonormal under the `tau`
/// quadrature, sorted by occupancy. Only the `keep` leading modes are
/// returned; all eigenvalues are.
///
/// With `a = int conj(mode) E dtau` the mode occupancy `<a^dag a>` is the
/// quadratic form of `W^(1/2) G^T W^(1/2)` in `W^(1/2) mode`, so that is the
/// matrix diagonalized.
pub fn kl_decompose(kernel: &CoherenceKernel, keep: usize) -> Result<ModeDecomposition> {
    let n = kernel.dim();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let sw: Vec<f64> = kernel.tau.weights.iter().map(|w| w.sqrt()).collect();
    let h = DMatrix::from_fn(n, n, |r, c| kernel.hermitian[c * n + r] * (sw[r] * sw[c]));
    if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("coherence kernel has non-finite entries".into()));
    }
    let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let trace_eig: f64 = eigenvalues.iter().sum();
    let trace = kernel.trace();
    if (trace_eig - trace).abs() > 1e-8 * (scale * n as f64).max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "eigenvalue sum {trace_eig} departs from trace {trace} (largest entry {scale})"
        )));
    }
    let positive: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let leading_fraction = if positive > 0.0 { eigenvalues[0].max(0.0) / positive } else { 0.0 };
    let modes = order
        .iter()
        .take(keep.min(n))
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            let mut values: Vec<C64> = (0..n).map(|i| col[i] / sw[i]).collect();
            fix_phase(&mut values);
            let occupancy = eig.eigenvalues[k];
            ModeFunction {
                tau: kernel.tau.clone(),
                values,
                occupancy,
                fraction: if positive > 0.0 { occupancy.max(0.0) / positive } else { 0.0 },
            }
        })
        .collect();
    Ok(ModeDecomposition {
        eigenvalues,
        modes,
        leading_fraction,
        trace,
    })
}

/// Rotates the global phase so the largest sample is real and positive.
pub fn fix_phase(values: &mut [C64]) {
    let peak = values.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()));
    if let Some(p) = peak {
        if p.norm() > 0.0 {
            let rot = p.conj() / p.norm();
            values.iter_mut().for_each(|v| *v *= rot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau() -> Grid1D {
        Grid1D::from_origin(64, 0.5)
    }

    fn pulse(t: &Grid1D, center: f64, chirp: f64) -> Vec<C64> {
        t.points
            .iter()
            .map(|&x| C64::from_polar((-(x - center).powi(2) / 20.0).exp(), chirp * x))
            .collect()
    }

    #[test]
    fn rank_one_kernel_recovers_the_field() {
        let t = tau();
        let e = pulse(&t, 12.0, 0.3);
        let k = classical_kernel(&t, &e);
        let d = kl_decompose(&k, 2).unwrap();
        let energy: f64 = e.iter().zip(&t.weights).map(|(v, w)| w * v.norm_sqr()).sum();
        assert!((d.eigenvalues[0] - energy).abs() < 1e-10 * energy);
        assert!(d.eigenvalues[1].abs() < 1e-10 * energy);
        let m = ModeFunction::normalized(&t, &e).unwrap();
        assert!((mode_overlap(&m, d.leading()).unwrap() - 1.0).abs() < 1e-10);
        assert!((d.leading().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetrization_is_idempotent() {
        let t = tau();
        let (e1, e2) = (pulse(&t, 10.0, 0.1), pulse(&t, 20.0, -0.2));
        let fields = vec![
            DetectorFieldPair { e1: e1.clone(), e2: e2.clone() },
            DetectorFieldPair { e1: e2.clone(), e2: e1.clone() },
        ];
        let k = g1_kernel(&t, &fields).unwrap();
        assert!(k.asymmetry > 0.0);
        let again = from_raw(t.clone(), 2, k.hermitian.clone());
        assert_eq!(again.asymmetry, 0.0);
        let a = kl_decompose(&k, 1).unwrap();
        let b = kl_decompose(&again, 1).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_fields_give_zero_kernel() {
        let t = tau();
        let z = DetectorFieldPair { e1: vec![C64::new(0.0, 0.0); 64], e2: vec![C64::new(0.0, 0.0); 64] };
        let k = g1_kernel(&t, &[z.clone(), z]).unwrap();
        assert!(k.raw.iter().all(|v| *v == C64::new(0.0, 0.0)));
        let d = kl_decompose(&k, 1).unwrap();
        assert_eq!(d.leading_fraction, 0.0);
    }

    #[test]
    fn empty_ensemble_is_an_error() {
        assert!(matches!(g1_kernel(&tau(), &[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn time_reversed_mode_overlaps_less() {
        let t = tau();
        let e = pulse(&t, 8.0, 0.0);
        let rev: Vec<C64> = e.iter().rev().copied().collect();
        let (a, b) = (ModeFunction::normalized(&t, &e).unwrap(), ModeFunction::normalized(&t, &rev).unwrap());
        assert!((mode_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(mode_overlap(&a, &b).unwrap() < 0.5);
    }
}
