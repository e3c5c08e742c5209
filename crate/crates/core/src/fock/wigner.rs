use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerPoint {
    pub x: f64,
    pub p: f64,
    pub w: f64,
}

/// Wigner function at each `(x, p)` via the Laguerre expansion of `|m><n|`.
pub fn wigner(rho: &DensityMatrix, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    if rho.n_modes() != 1 {
        return Err(Error::DimensionMismatch("wigner needs a single-mode state".into()));
    }
    let d = rho.dim();
    // √(n!/(n+k)!) for all n + k < d
    let mut ratio = vec![vec![0.0; d]; d];
    for n in 0..d {
        let mut r = 1.0;
        for k in 0..(d - n) {
            if k > 0 {
                r /= ((n + k) as f64).sqrt();
            }
            ratio[n][k] = r;
        }
    }
    let mut lag = vec![0.0; d];
    let out = points
        .iter()
        .map(|&(x, p)| {
            let r2 = x * x + p * p;
            let u = 2.0 * r2;
            let z = Complex64::new(std::f64::consts::SQRT_2 * x, -std::f64::consts::SQRT_2 * p);
            let mut zk = Complex64::new(1.0, 0.0);
            let mut total = 0.0;
            for k in 0..d {
                let len = d - k;
                let kf = k as f64;
                lag[0] = 1.0;
                if len > 1 {
                    lag[1] = 1.0 + kf - u;
                }
                for j in 1..len.saturating_sub(1) {
                    let jf = j as f64;
                    lag[j + 1] = ((2.0 * jf + 1.0 + kf - u) * lag[j] - (jf + kf) * lag[j - 1]) / (jf + 1.0);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..len {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    acc += rho.entries[(n + k, n)] * (sign * ratio[n][k] * lag[n]);
                }
                let term = acc * zk;
                total += if k == 0 { term.re } else { 2.0 * term.re };
                zk *= z;
            }
            total * (-r2).exp() / std::f64::consts::PI
        })
        .collect();
    Ok(out)
}

/// Evaluate on the tensor grid `xs × ps`, `x` varying slowest.
pub fn wigner_grid(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<Vec<WignerPoint>> {
    let pts: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ps.iter().map(move |&p| (x, p))).collect();
    let w = wigner(rho, &pts)?;
    Ok(pts.iter().zip(w).map(|(&(x, p), w)| WignerPoint { x, p, w }).collect())
}
