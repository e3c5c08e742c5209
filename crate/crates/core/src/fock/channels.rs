use crate::error::{Error, Result};
use crate::linalg::{cis, CMat};

use super::{split_index, DensityMatrix};

/// `b[n][k] = √(C(n,k) η^{n−k} (1−η)^k)`, the amplitude for losing `k` of `n` photons.
fn attenuation_table(eta: f64, dim: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; dim]; dim];
    for (n, row) in table.iter_mut().enumerate() {
        let mut binom = 1.0_f64;
        for (k, slot) in row.iter_mut().enumerate().take(n + 1) {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
            }
            *slot = (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt();
        }
    }
    table
}

fn check_mode(rho: &DensityMatrix, mode: usize) -> Result<()> {
    if mode >= rho.n_modes() {
        return Err(Error::BadModeIndex {
            index: mode,
            modes: rho.n_modes(),
        });
    }
    Ok(())
}

/// Pure-loss channel of transmissivity `eta` on `mode` (beam splitter with a vacuum
/// ancilla, ancilla traced out).
pub fn loss_channel(rho: &DensityMatrix, eta: f64, mode: usize) -> Result<DensityMatrix> {
    check_mode(rho, mode)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", "must lie in [0, 1]"));
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let dims = &rho.mode_dims;
    let md = dims[mode];
    let b = attenuation_table(eta, md);
    let n = rho.dim();
    let stride = if dims.len() == 2 && mode == 0 { dims[1] } else { 1 };
    let mode_of = |flat: usize| -> usize {
        let (i, j) = split_index(flat, dims);
        if mode == 0 {
            i
        } else {
            j
        }
    };
    let mut out = CMat::zeros(n, n);
    for r in 0..n {
        let m = mode_of(r);
        for col in 0..n {
            let l = mode_of(col);
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            let kmax = (md - 1 - m).min(md - 1 - l);
            for k in 0..=kmax {
                let w = b[m + k][k] * b[l + k][k];
                if w != 0.0 {
                    acc += rho.entries[(r + k * stride, col + k * stride)] * w;
                }
            }
            out[(r, col)] = acc;
        }
    }
    DensityMatrix::new(out, dims.clone())
}

/// Heisenberg-picture adjoint of the single-mode loss channel, used to pull
/// detector POVM elements back in front of a lossy detector.
pub fn loss_channel_adjoint(op: &CMat, eta: f64) -> CMat {
    let d = op.nrows();
    if eta == 1.0 {
        return op.clone();
    }
    let b = attenuation_table(eta, d);
    CMat::from_fn(d, d, |m, l| {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for k in 0..=m.min(l) {
            acc += op[(m - k, l - k)] * (b[m][k] * b[l][k]);
        }
        acc
    })
}

/// Conjugation by `diag(e^{i n theta})` on `mode`.
pub fn phase_rotate(rho: &DensityMatrix, theta: f64, mode: usize) -> Result<DensityMatrix> {
    check_mode(rho, mode)?;
    let dims = &rho.mode_dims;
    let idx = |flat: usize| -> f64 {
        let (i, j) = split_index(flat, dims);
        (if mode == 0 { i } else { j }) as f64
    };
    let n = rho.dim();
    let out = CMat::from_fn(n, n, |r, col| rho.entries[(r, col)] * cis(theta * (idx(r) - idx(col))));
    DensityMatrix::new(out, dims.clone())
}
