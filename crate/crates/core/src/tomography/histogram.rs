use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::Sign;
use crate::linalg;
use crate::seed::stage_rng;
use crate::steering::SteeringFunctional;

use super::mh::Chain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationHistogram {
    pub s_values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// `max(0, −mean)/std`
    pub separation_sigmas: f64,
}

impl ViolationHistogram {
    pub fn from_values(s_values: Vec<f64>) -> Result<Self> {
        if s_values.is_empty() {
            return Err(Error::invalid("s_values", "empty histogram"));
        }
        let n = s_values.len() as f64;
        let mean = s_values.iter().sum::<f64>() / n;
        let var = if s_values.len() > 1 {
            s_values.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        let separation_sigmas = if std > 0.0 {
            (-mean).max(0.0) / std
        } else if mean < 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Ok(ViolationHistogram {
            s_values,
            mean,
            std,
            separation_sigmas,
        })
    }
}

/// `s[c][i] = p̂_c Tr(F_c ρ_c^(i))` for every condition `c = 2 j + sign`.
fn contributions(chains: &[Chain], frequencies: &[[f64; 2]], functional: &SteeringFunctional) -> Result<Vec<Vec<f64>>> {
    let m = functional.m_a();
    if chains.len() != 2 * m || frequencies.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} chains and {} frequency pairs for {m} settings",
            chains.len(),
            frequencies.len()
        )));
    }
    if chains.iter().any(|ch| ch.dim != functional.dim()) {
        return Err(Error::DimensionMismatch("chain and functional dimensions differ".into()));
    }
    Ok(chains
        .iter()
        .enumerate()
        .map(|(cidx, ch)| {
            let (j, sign) = (cidx / 2, Sign::from_index(cidx % 2));
            let f = linalg::hermitian_coords(functional.operator(j, sign));
            let p = frequencies[j][sign.index()];
            (0..ch.len())
                .map(|i| p * ch.sample_coords(i).iter().zip(&f).map(|(x, y)| x * y).sum::<f64>())
                .collect()
        })
        .collect())
}

/// `S_i = Σ_{a,θ} p̂(a|θ) Tr[F_{a|θ} ρ^(i)_{a|θ}]` for aligned sample indices `i`.
/// Chains are given in condition order `2 j + sign.index()`.
pub fn violation_histogram(chains: &[Chain], frequencies: &[[f64; 2]], functional: &SteeringFunctional) -> Result<ViolationHistogram> {
    let n = chains.first().map_or(0, Chain::len);
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::MismatchedChains);
    }
    let parts = contributions(chains, frequencies, functional)?;
    let values = (0..n).map(|i| parts.iter().map(|p| p[i]).sum()).collect();
    ViolationHistogram::from_values(values)
}

/// Like [`violation_histogram`], but each of the `n_values` evaluations combines an
/// independently drawn sample index per condition, so more values than retained
/// states can be produced.
pub fn violation_histogram_resampled(
    chains: &[Chain],
    frequencies: &[[f64; 2]],
    functional: &SteeringFunctional,
    n_values: usize,
    seed: u64,
) -> Result<ViolationHistogram> {
    let n = chains.first().map_or(0, Chain::len);
    if n == 0 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::MismatchedChains);
    }
    let parts = contributions(chains, frequencies, functional)?;
    let mut rng = stage_rng(seed, "histogram", 0);
    let values = (0..n_values)
        .map(|_| parts.iter().map(|p| p[rng.random_range(0..n)]).sum())
        .collect();
    ViolationHistogram::from_values(values)
}
