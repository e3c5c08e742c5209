use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::linalg::{self, c, CMat};
use crate::photonics::ChainConfig;
use crate::seed::{derive_seed, stage_rng};

use super::maxlik::{log_likelihood, PovmSet};
use super::records::{ConditionCounts, ConditionSlice};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub n_retained: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl ChainOptions {
    pub fn from_config(chain: &ChainConfig, master_seed: u64, condition: usize) -> Self {
        ChainOptions {
            n_retained: chain.n_retained,
            burn_in: chain.burn_in,
            thin: chain.thin,
            step_size: chain.step_size,
            seed: derive_seed(master_seed, "mh", condition as u64),
        }
    }
}

const TARGET_ACCEPTANCE: f64 = 0.3;
const TUNE_WINDOW: usize = 50;
const MAX_STEP: f64 = 4.0;

/// Retained states of one chain, stored as Hermitian-basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub dim: usize,
    coords: Vec<f64>,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub step_size: f64,
    /// Acceptance left `[0.05, 0.8]`.
    pub pathological: bool,
}

impl Chain {
    /// A chain that repeats one state.
    pub fn frozen(rho: &DensityMatrix, n: usize) -> Self {
        let one = linalg::hermitian_coords(&rho.entries);
        Chain {
            dim: rho.dim(),
            coords: one.iter().copied().cycle().take(one.len() * n).collect(),
            acceptance_rate: 0.0,
            step_size: 0.0,
            pathological: true,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn sample_coords(&self, i: usize) -> &[f64] {
        let n = self.dim * self.dim;
        &self.coords[i * n..(i + 1) * n]
    }

    pub fn state(&self, i: usize) -> DensityMatrix {
        DensityMatrix::single_mode(linalg::from_hermitian_coords(self.sample_coords(i), self.dim))
    }

    /// In the orthonormal basis `Tr ρ² = |coords|²`.
    pub fn mean_purity(&self) -> f64 {
        (0..self.len())
            .map(|i| self.sample_coords(i).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            / self.len() as f64
    }
}

/// Accept a move with log-likelihood ratio `log_ratio`, given `u` uniform on `[0, 1)`.
pub fn metropolis_accept(log_ratio: f64, u: f64) -> bool {
    log_ratio >= 0.0 || u < log_ratio.exp()
}

fn density_from(a: &CMat) -> CMat {
    let rho = a * a.adjoint();
    let tr = linalg::trace(&rho).re;
    linalg::hermitian_part(&rho) / c(tr, 0.0)
}

/// Random walk over `d × d` purifications `A`, `ρ = A A† / Tr`, with proposal
/// `A' = (A + s G)/|A + s G|` for a standard complex Gaussian `G`. The step is tuned
/// toward 0.3 acceptance during burn-in and frozen afterwards.
pub fn mh_sample_with_povm(counts: &ConditionCounts, povm: &PovmSet, start: &DensityMatrix, opts: &ChainOptions) -> Result<Chain> {
    if opts.n_retained == 0 || opts.thin == 0 || !(opts.step_size > 0.0) {
        return Err(Error::invalid("chain", "n_retained, thin and step_size must be positive"));
    }
    let d = povm.dim();
    if start.dim() != d {
        return Err(Error::DimensionMismatch(format!("start state has dim {}, POVM {d}", start.dim())));
    }
    let n: Vec<f64> = counts.flat().map(|x| x as f64).collect();
    if n.len() != povm.n_outcomes() {
        return Err(Error::DimensionMismatch("counts do not match the POVM set".into()));
    }
    let ll_of = |rho: &CMat| -> f64 {
        let coords = linalg::hermitian_coords(rho);
        log_likelihood(&n, &povm.probabilities_from_coords(&coords))
    };
    let mut rng = stage_rng(opts.seed, "mh-walk", 0);
    let mut a = linalg::psd_sqrt(&start.entries);
    a /= c(a.norm(), 0.0);
    let mut rho = density_from(&a);
    let mut ll = ll_of(&rho);
    let mut step = opts.step_size;
    let mut window_accepts = 0usize;
    let total_steps = opts.burn_in + opts.n_retained * opts.thin;
    let mut coords = Vec::with_capacity(opts.n_retained * d * d);
    let mut accepted_after = 0usize;
    for it in 0..total_steps {
        let g = CMat::from_fn(d, d, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let mut prop = &a + g * c(step, 0.0);
        let norm = prop.norm();
        prop /= c(norm, 0.0);
        let rho_p = density_from(&prop);
        let ll_p = ll_of(&rho_p);
        let u: f64 = rng.random();
        let accept = metropolis_accept(ll_p - ll, u);
        if accept {
            a = prop;
            rho = rho_p;
            ll = ll_p;
        }
        if it < opts.burn_in {
            window_accepts += usize::from(accept);
            if (it + 1) % TUNE_WINDOW == 0 {
                let rate = window_accepts as f64 / TUNE_WINDOW as f64;
                step = (step * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-7, MAX_STEP);
                window_accepts = 0;
            }
        } else {
            accepted_after += usize::from(accept);
            if (it - opts.burn_in + 1) % opts.thin == 0 {
                coords.extend(linalg::hermitian_coords(&rho));
            }
        }
    }
    let acceptance_rate = accepted_after as f64 / (opts.n_retained * opts.thin) as f64;
    Ok(Chain {
        dim: d,
        coords,
        acceptance_rate,
        step_size: step,
        pathological: !(0.05..=0.8).contains(&acceptance_rate),
    })
}

pub fn mh_sample(slice: ConditionSlice<'_>, eta_det: f64, n_max: usize, start: &DensityMatrix, opts: &ChainOptions) -> Result<Chain> {
    let povm = PovmSet::new(n_max, eta_det, slice.bins, slice.bob_phases)?;
    mh_sample_with_povm(slice.counts, &povm, start, opts)
}
