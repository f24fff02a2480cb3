//! Exact one-axis twisting in the symmetric (Dicke) subspace.
//!
//! The initial state is the coherent spin state along `+x`; `H = chi J_z^2`
//! multiplies the `J_z = m` amplitude by `exp(-i chi m^2 t)`. All first and
//! second spin moments are summed exactly.

use crate::spin::SpinState;
use crate::C64;

pub const MAX_ATOMS: usize = 1000;

/// Exact spin moments for `n` atoms after twisting for `chi t`.
pub fn dicke_oracle(n: usize, chi: f64, t: f64) -> SpinState {
    assert!(n <= MAX_ATOMS, "Dicke oracle limited to {MAX_ATOMS} atoms");
    let j = n as f64 / 2.0;
    // c_m = sqrt(C(n, j + m)) / 2^j, index k = j + m
    let mut ln_binom = vec![0.0; n + 1];
    for k in 1..=n {
        ln_binom[k] = ln_binom[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
    }
    let amp: Vec<C64> = (0..=n)
        .map(|k| {
            let m = k as f64 - j;
            let mag = (0.5 * ln_binom[k] - j * std::f64::consts::LN_2).exp();
            C64::from_polar(mag, -chi * m * m * t)
        })
        .collect();
    let m_of = |k: usize| k as f64 - j;
    // <m+1| J_+ |m> = sqrt((j - m)(j + m + 1))
    let up = |k: usize| ((j - m_of(k)) * (j + m_of(k) + 1.0)).max(0.0).sqrt();

    let mut jz = 0.0;
    let mut jz2 = 0.0;
    let mut jp = C64::new(0.0, 0.0);
    let mut jp2 = C64::new(0.0, 0.0);
    let mut jpjm = 0.0;
    let mut jmjp = 0.0;
    let mut sym_pz = C64::new(0.0, 0.0);
    for k in 0..=n {
        let p = amp[k].norm_sqr();
        let m = m_of(k);
        jz += p * m;
        jz2 += p * m * m;
        // J_+ J_- |m> = (j + m)(j - m + 1) |m>
        jpjm += p * (j + m) * (j - m + 1.0);
        jmjp += p * (j - m) * (j + m + 1.0);
        if k < n {
            let w = amp[k + 1].conj() * amp[k] * up(k);
            jp += w;
            // {J_+, J_z}/2 between m and m+1 carries m + 1/2
            sym_pz += w * (m + 0.5);
        }
        if k + 1 < n {
            jp2 += amp[k + 2].conj() * amp[k] * up(k) * up(k + 1);
        }
    }
    let jx = jp.re;
    let jy = jp.im;
    let xx = 0.25 * (2.0 * jp2.re + jpjm + jmjp);
    let yy = 0.25 * (-2.0 * jp2.re + jpjm + jmjp);
    let xy = 0.5 * jp2.im;
    let xz = sym_pz.re;
    let yz = sym_pz.im;
    SpinState {
        mean_atoms: n as f64,
        mean: [jx, jy, jz],
        second: [[xx, xy, xz], [xy, yy, yz], [xz, yz, jz2]],
    }
}

/// Dicke moments averaged over a Poisson distribution of the atom number
/// with mean `mean_atoms`: the state a two-mode coherent input produces.
pub fn poisson_dicke_oracle(mean_atoms: f64, chi: f64, t: f64) -> SpinState {
    let sd = mean_atoms.sqrt();
    let hi = ((mean_atoms + 12.0 * sd + 10.0).ceil() as usize).min(MAX_ATOMS);
    let mut acc = SpinState {
        mean_atoms: 0.0,
        mean: [0.0; 3],
        second: [[0.0; 3]; 3],
    };
    let mut ln_p = -mean_atoms;
    for n in 0..=hi {
        if n > 0 {
            ln_p += mean_atoms.ln() - (n as f64).ln();
        }
        let p = ln_p.exp();
        if p < 1e-300 {
            continue;
        }
        let s = dicke_oracle(n, chi, t);
        acc.mean_atoms += p * s.mean_atoms;
        for i in 0..3 {
            acc.mean[i] += p * s.mean[i];
            for k in 0..3 {
                acc.second[i][k] += p * s.second[i][k];
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untwisted_state_is_coherent_along_x() {
        let s = dicke_oracle(40, 1.0, 0.0);
        assert!((s.mean[0] - 20.0).abs() < 1e-10);
        assert!(s.mean[1].abs() < 1e-12 && s.mean[2].abs() < 1e-12);
        let c = s.covariance();
        assert!(c[0][0].abs() < 1e-9);
        assert!((c[1][1] - 10.0).abs() < 1e-10);
        assert!((c[2][2] - 10.0).abs() < 1e-10);
        assert!(c[1][2].abs() < 1e-12);
    }

    #[test]
    fn casimir_is_conserved() {
        let n = 30;
        let s = dicke_oracle(n, 0.7, 0.33);
        let j = n as f64 / 2.0;
        let casimir = s.second[0][0] + s.second[1][1] + s.second[2][2];
        assert!((casimir - j * (j + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn poisson_mixture_of_coherent_states() {
        let s = poisson_dicke_oracle(20.0, 1.0, 0.0);
        assert!((s.mean_atoms - 20.0).abs() < 1e-9);
        assert!((s.mean[0] - 10.0).abs() < 1e-9);
        let c = s.covariance();
        for i in 0..3 {
            assert!((c[i][i] - 5.0).abs() < 1e-8, "axis {i}: {}", c[i][i]);
        }
    }
}
