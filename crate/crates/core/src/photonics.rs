//! Experiment configuration and the two-mode hybrid entangled state
//! `√R |0>|CSS−> − √(1−R) |1>|CSS+>` with its loss budget.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, cat_state, loss_channel, phase_rotate, photon_subtract, squeezed_vacuum, Cutoff, DensityMatrix, Parity,
    StateVector,
};
use crate::homodyne::wavefunctions;
use crate::linalg::{c, cis, CVec};

/// Which description of Bob's continuous-variable qubit basis to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTier {
    /// Exact cat states `|CSS±>` of amplitude `alpha`.
    IdealCat,
    /// Squeezed vacuum for `|CSS+>` and photon-subtracted squeezed vacuum for `|CSS−>`.
    SqueezedApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        Complex64::new(v.re, v.im)
    }
}

/// Tomography settings for Bob's conditional states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub n_max: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub n_bins: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            n_max: 10,
            q_min: -6.0,
            q_max: 6.0,
            n_bins: 100,
            max_iter: 2000,
            tol: 1e-9,
        }
    }
}

/// Metropolis-Hastings chain settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_retained: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_size: f64,
    pub n_s_values: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_retained: 10_000,
            burn_in: 2_000,
            thin: 4,
            step_size: 0.02,
            n_s_values: 100_000,
        }
    }
}

/// Every physical and numerical parameter of a run. Angles are stored in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: ComplexValue,
    pub squeezing_db: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "eta_A")]
    pub eta_a: f64,
    #[serde(rename = "eta_B_channel")]
    pub eta_b_channel: f64,
    #[serde(rename = "eta_B_det")]
    pub eta_b_det: f64,
    #[serde(rename = "n_max_A")]
    pub n_max_a: usize,
    #[serde(rename = "n_max_B")]
    pub n_max_b: usize,
    #[serde(rename = "m_A")]
    pub m_a: usize,
    pub phase_noise_deg: f64,
    pub samples_per_phase: usize,
    pub seed: u64,
    pub model_tier: ModelTier,
    pub tail_tolerance: f64,
    pub bob_phases_deg: Vec<f64>,
    /// Leading-subspace trace loss allowed when shrinking Bob's SDP dimension.
    pub sdp_trace_capture: f64,
    pub tomography: TomographyConfig,
    pub chain: ChainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: ComplexValue { re: 1.0, im: 0.0 },
            squeezing_db: 3.0,
            r: 0.36,
            eta_a: 0.75,
            eta_b_channel: 0.90,
            eta_b_det: 0.85,
            n_max_a: 3,
            n_max_b: 18,
            m_a: 6,
            phase_noise_deg: 3.0,
            samples_per_phase: 120_000,
            seed: 1,
            model_tier: ModelTier::SqueezedApprox,
            tail_tolerance: fock::DEFAULT_TAIL_TOLERANCE,
            bob_phases_deg: (0..6).map(|k| 30.0 * k as f64).collect(),
            sdp_trace_capture: 1e-6,
            tomography: TomographyConfig::default(),
            chain: ChainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn alpha(&self) -> Complex64 {
        self.alpha.into()
    }

    /// Alice's settings `theta_n = n π / m_A`.
    pub fn alice_phases(&self) -> Vec<f64> {
        (0..self.m_a)
            .map(|n| n as f64 * std::f64::consts::PI / self.m_a as f64)
            .collect()
    }

    pub fn bob_phases(&self) -> Vec<f64> {
        self.bob_phases_deg.iter().map(|d| d.to_radians()).collect()
    }

    pub fn phase_noise_sigma(&self) -> f64 {
        self.phase_noise_deg.to_radians()
    }

    pub fn cutoff_b(&self) -> Cutoff {
        Cutoff::new(self.n_max_b).with_tail_tolerance(self.tail_tolerance)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} is outside [0, 1]")))
            }
        };
        unit("R", self.r)?;
        unit("eta_A", self.eta_a)?;
        unit("eta_B_channel", self.eta_b_channel)?;
        unit("eta_B_det", self.eta_b_det)?;
        if self.eta_b_det == 0.0 {
            return Err(Error::invalid("eta_B_det", "must be positive for loss-corrected tomography"));
        }
        if self.m_a < 1 {
            return Err(Error::invalid("m_A", "must be at least 1"));
        }
        if self.samples_per_phase < 1 {
            return Err(Error::invalid("samples_per_phase", "must be at least 1"));
        }
        if self.n_max_a < 1 {
            return Err(Error::invalid("n_max_A", "Alice's mode needs at least |0> and |1>"));
        }
        if self.n_max_b < 2 {
            return Err(Error::invalid("n_max_B", "must be at least 2"));
        }
        if !(self.phase_noise_deg >= 0.0 && self.phase_noise_deg.is_finite()) {
            return Err(Error::invalid("phase_noise_deg", "must be finite and non-negative"));
        }
        if !(0.0..=10.0).contains(&self.squeezing_db) {
            return Err(Error::invalid("squeezing_db", "must lie in [0, 10]"));
        }
        if self.bob_phases_deg.is_empty() {
            return Err(Error::invalid("bob_phases_deg", "needs at least one phase"));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::invalid("tail_tolerance", "must be positive"));
        }
        let t = &self.tomography;
        if t.n_bins < 2 || !(t.q_max > t.q_min) || t.n_max < 1 || t.max_iter < 1 {
            return Err(Error::invalid("tomography", "needs n_bins ≥ 2, q_max > q_min, n_max ≥ 1, max_iter ≥ 1"));
        }
        let ch = &self.chain;
        if ch.n_retained < 1 || ch.thin < 1 || !(ch.step_size > 0.0) || ch.n_s_values < 1 {
            return Err(Error::invalid("chain", "n_retained, thin, step_size and n_s_values must be positive"));
        }
        Ok(())
    }
}

/// Headroom levels used before truncating the squeezed basis states to `n_max_B`.
const SQUEEZED_HEADROOM: usize = 60;

/// Bob's basis `(|CSS−>, |CSS+>)` for the configured tier.
///
/// In the squeezed tier the squeezed vacuum is rotated so its anti-squeezed axis
/// lies along `arg(alpha)`, and the subtracted state is phase-aligned so both
/// overlaps with the corresponding cats are real and positive.
pub fn cv_basis(config: &ExperimentConfig) -> Result<(StateVector, StateVector)> {
    let cutoff = config.cutoff_b();
    let alpha = config.alpha();
    match config.model_tier {
        ModelTier::IdealCat => Ok((
            cat_state(alpha, Parity::Odd, cutoff)?,
            cat_state(alpha, Parity::Even, cutoff)?,
        )),
        ModelTier::SqueezedApprox => {
            if config.squeezing_db == 0.0 {
                return Err(Error::invalid("squeezing_db", "squeezed tier needs non-zero squeezing"));
            }
            let phi = alpha.arg();
            let wide = Cutoff::new(config.n_max_b + SQUEEZED_HEADROOM).with_tail_tolerance(1.0);
            let sv = squeezed_vacuum(config.squeezing_db, wide)?;
            let rotated = rotate_vector(&sv, phi + std::f64::consts::FRAC_PI_2);
            let mut sub = photon_subtract(&rotated)?;
            sub.amplitudes *= cis(-phi);
            let plus = rotated.resized(config.n_max_b);
            let minus = sub.resized(config.n_max_b);
            for s in [&plus, &minus] {
                if s.tail_weight > cutoff.tail_tolerance {
                    return Err(Error::CutoffTooSmall {
                        tail: s.tail_weight,
                        tolerance: cutoff.tail_tolerance,
                    });
                }
            }
            Ok((minus, plus))
        }
    }
}

fn rotate_vector(psi: &StateVector, theta: f64) -> StateVector {
    let mut out = psi.clone();
    for (n, a) in out.amplitudes.iter_mut().enumerate() {
        *a *= cis(theta * n as f64);
    }
    out
}

/// The pure two-mode state `√R |0>|CSS−> − √(1−R) |1>|CSS+>` (mode 0 is Alice's).
pub fn hybrid_state_vector(config: &ExperimentConfig) -> Result<StateVector> {
    config.validate()?;
    let (minus, plus) = cv_basis(config)?;
    let da = config.n_max_a + 1;
    let zero = StateVector::fock(0, config.n_max_a);
    let one = StateVector::fock(1, config.n_max_a);
    let a = zero.tensor(&minus).amplitudes * c(config.r.sqrt(), 0.0);
    let b = one.tensor(&plus).amplitudes * c((1.0 - config.r).sqrt(), 0.0);
    let v: CVec = a - b;
    StateVector::new(v, vec![da, config.n_max_b + 1], minus.tail_weight.max(plus.tail_weight))
}

/// `build_hybrid_state`: the pure two-mode density matrix before losses.
pub fn build_hybrid_state(config: &ExperimentConfig) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_pure(&hybrid_state_vector(config)?))
}

/// Transmission losses: `eta_A` on Alice's mode and `eta_B_channel` on Bob's.
/// Bob's detection efficiency is left out; tomography corrects for it.
pub fn apply_losses(rho: &DensityMatrix, config: &ExperimentConfig) -> Result<DensityMatrix> {
    let a = loss_channel(rho, config.eta_a, 0)?;
    loss_channel(&a, config.eta_b_channel, 1)
}

/// The state shared just before detection: hybrid state plus transmission loss.
pub fn shared_state(config: &ExperimentConfig) -> Result<DensityMatrix> {
    apply_losses(&build_hybrid_state(config)?, config)
}

/// Contract Alice's mode with `<q_theta|` and renormalize Bob's conditional vector.
pub fn project_quadrature(psi: &StateVector, q: f64, theta: f64) -> Result<StateVector> {
    if psi.mode_dims.len() != 2 {
        return Err(Error::DimensionMismatch("project_quadrature needs a two-mode state".into()));
    }
    let (da, db) = (psi.mode_dims[0], psi.mode_dims[1]);
    let wf = wavefunctions(da - 1, q);
    let mut out = CVec::zeros(db);
    for (i, w) in wf.iter().enumerate() {
        let coeff = cis(theta * i as f64) * *w;
        for b in 0..db {
            out[b] += coeff * psi.amplitudes[i * db + b];
        }
    }
    if out.norm() < 1e-300 {
        return Err(Error::ZeroResult("quadrature projection has zero norm"));
    }
    StateVector::new(out, vec![db], psi.tail_weight)
}

/// Rotate Bob's mode of a two-mode state.
pub fn rotate_bob(rho: &DensityMatrix, phi: f64) -> Result<DensityMatrix> {
    phase_rotate(rho, phi, 1)
}
