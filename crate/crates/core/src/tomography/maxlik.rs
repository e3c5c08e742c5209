use nalgebra::{DMatrix, DVector};

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::fock::{loss_channel_adjoint, DensityMatrix};
use crate::homodyne::{interval_overlaps, Sign};
use crate::linalg::{self, c, cis, CMat};
use crate::photonics::ExperimentConfig;

use super::records::{bin_records_for, BinEdges, BinnedData, ConditionCounts, ConditionSlice, QuadratureRecord};

pub(crate) const PROBABILITY_FLOOR: f64 = 1e-300;

/// Loss-corrected binned homodyne POVM for every (Bob phase, bin), stored as rows of
/// Hermitian-basis coordinates so that `p = rows · coords(rho)`.
#[derive(Debug, Clone)]
pub struct PovmSet {
    pub n_max: usize,
    pub eta: f64,
    pub bins: BinEdges,
    pub phases: Vec<f64>,
    rows: DMatrix<f64>,
}

impl PovmSet {
    pub fn new(n_max: usize, eta: f64, bins: &BinEdges, phases: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid("eta_det", "must lie in (0, 1]"));
        }
        if phases.is_empty() {
            return Err(Error::invalid("bob_phases", "need at least one phase"));
        }
        let d = n_max + 1;
        let reach = bins.q_min.abs().max(bins.q_max.abs()).max(((2 * n_max + 1) as f64).sqrt()) + 12.0;
        let overlaps: Vec<DMatrix<f64>> = (0..bins.n_bins)
            .map(|b| {
                let (lo, hi) = bins.limits(b);
                let (lo, hi) = (lo.max(-reach), hi.min(reach));
                let panels = ((hi - lo) / 0.2).ceil().max(1.0) as usize;
                interval_overlaps(n_max, lo, hi, panels)
            })
            .collect();
        let mut rows = DMatrix::zeros(phases.len() * bins.n_bins, d * d);
        for (k, &phi) in phases.iter().enumerate() {
            for (b, ov) in overlaps.iter().enumerate() {
                let pi = CMat::from_fn(d, d, |m, n| cis(phi * (n as f64 - m as f64)) * ov[(m, n)]);
                let pi = if eta < 1.0 { loss_channel_adjoint(&pi, eta) } else { pi };
                let coords = linalg::hermitian_coords(&pi);
                for (p, v) in coords.into_iter().enumerate() {
                    rows[(k * bins.n_bins + b, p)] = v;
                }
            }
        }
        Ok(PovmSet {
            n_max,
            eta,
            bins: *bins,
            phases: phases.to_vec(),
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn n_outcomes(&self) -> usize {
        self.rows.nrows()
    }

    pub fn operator(&self, phase_index: usize, bin: usize) -> CMat {
        let row: Vec<f64> = self.rows.row(phase_index * self.bins.n_bins + bin).iter().copied().collect();
        linalg::from_hermitian_coords(&row, self.dim())
    }

    pub fn probabilities(&self, rho: &CMat) -> DVector<f64> {
        self.probabilities_from_coords(&linalg::hermitian_coords(rho))
    }

    pub(crate) fn probabilities_from_coords(&self, coords: &[f64]) -> DVector<f64> {
        &self.rows * DVector::from_column_slice(coords)
    }

    /// `Σ_b w_b Π_b`
    pub(crate) fn combine(&self, weights: &DVector<f64>) -> CMat {
        let coords = self.rows.tr_mul(weights);
        linalg::from_hermitian_coords(coords.as_slice(), self.dim())
    }

    /// Unnormalized multinomial log-likelihood `Σ n_b ln p_b`.
    pub fn log_likelihood(&self, counts: &[f64], rho: &CMat) -> f64 {
        log_likelihood(counts, &self.probabilities(rho))
    }
}

pub(crate) fn log_likelihood(counts: &[f64], probs: &DVector<f64>) -> f64 {
    counts
        .iter()
        .zip(probs.iter())
        .filter(|(n, _)| **n > 0.0)
        .map(|(n, p)| n * p.max(PROBABILITY_FLOOR).ln())
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct MaxLikOptions {
    pub max_iter: usize,
    /// Stop once the per-event log-likelihood gains less than this in one iteration.
    pub tol: f64,
}

impl Default for MaxLikOptions {
    fn default() -> Self {
        MaxLikOptions { max_iter: 2000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct MaxLikResult {
    pub rho: DensityMatrix,
    /// Per-event log-likelihood of `rho`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-event log-likelihood after every iteration, starting with the initial state.
    pub history: Vec<f64>,
}

fn conjugate_normalized(r: &CMat, rho: &CMat) -> CMat {
    let out = linalg::hermitian_part(&(r * rho * r));
    let tr = linalg::trace(&out).re;
    out / c(tr, 0.0)
}

/// `ρ ← R ρ R / Tr` from the maximally mixed state. If a full step would lower the
/// likelihood, the diluted map `𝟙 + εR` is used with `ε` halved until it does not,
/// so the recorded likelihood never decreases.
pub fn maxlik_with_povm(counts: &ConditionCounts, povm: &PovmSet, opts: &MaxLikOptions) -> Result<MaxLikResult> {
    let n: Vec<f64> = counts.flat().map(|x| x as f64).collect();
    if n.len() != povm.n_outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "{} count cells for {} POVM outcomes",
            n.len(),
            povm.n_outcomes()
        )));
    }
    let total: f64 = n.iter().sum();
    if total == 0.0 {
        return Err(Error::EmptyCondition {
            phase_index: counts.alice_phase_index,
            sign: counts.alice_sign.value() as i8,
        });
    }
    let d = povm.dim();
    let freq: Vec<f64> = n.iter().map(|x| x / total).collect();
    let ll_of = |rho: &CMat| povm.log_likelihood(&freq, rho);
    let mut rho = CMat::identity(d, d) / c(d as f64, 0.0);
    let mut ll = ll_of(&rho);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let id = CMat::identity(d, d);
    for it in 1..=opts.max_iter {
        iterations = it;
        let p = povm.probabilities(&rho);
        let w = DVector::from_iterator(p.len(), freq.iter().zip(p.iter()).map(|(f, p)| f / p.max(PROBABILITY_FLOOR)));
        let r = povm.combine(&w);
        let mut next = conjugate_normalized(&r, &rho);
        let mut ll_next = ll_of(&next);
        if ll_next < ll {
            let mut eps = 1.0;
            let mut found = false;
            for _ in 0..40 {
                eps *= 0.5;
                let re = &id + &r * c(eps, 0.0);
                next = conjugate_normalized(&re, &rho);
                ll_next = ll_of(&next);
                if ll_next >= ll {
                    found = true;
                    break;
                }
            }
            if !found {
                converged = true;
                break;
            }
        }
        let gain = ll_next - ll;
        rho = next;
        ll = ll_next;
        history.push(ll);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(MaxLikResult {
        rho: DensityMatrix::single_mode(rho),
        log_likelihood: ll,
        iterations,
        converged,
        history,
    })
}

pub fn maxlik_reconstruct(slice: ConditionSlice<'_>, eta_det: f64, n_max: usize, opts: &MaxLikOptions) -> Result<MaxLikResult> {
    let povm = PovmSet::new(n_max, eta_det, slice.bins, slice.bob_phases)?;
    maxlik_with_povm(slice.counts, &povm, opts)
}

#[derive(Debug, Clone)]
pub struct ConditionReconstruction {
    pub alice_phase_index: usize,
    pub alice_sign: Sign,
    pub frequency: f64,
    pub total: u64,
    pub maxlik: MaxLikResult,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub assemblage: Assemblage,
    pub data: BinnedData,
    pub povm: PovmSet,
    /// Index `2 j + sign.index()`.
    pub conditions: Vec<ConditionReconstruction>,
}

impl Reconstruction {
    pub fn frequencies(&self) -> Vec<[f64; 2]> {
        (0..self.data.m_a).map(|j| self.data.sign_frequencies(j)).collect()
    }
}

/// `σ_{a|θ} = p̂(a|θ) ρ̂_{a|θ}` with `ρ̂` the loss-corrected MaxLik estimate of each condition.
pub fn reconstruct_assemblage(records: &[QuadratureRecord], config: &ExperimentConfig) -> Result<Reconstruction> {
    let t = &config.tomography;
    let bins = BinEdges::new(t.q_min, t.q_max, t.n_bins)?;
    let data = bin_records_for(records, config.m_a, bins)?;
    let povm = PovmSet::new(t.n_max, config.eta_b_det, &data.bins, &data.bob_phases)?;
    let opts = MaxLikOptions {
        max_iter: t.max_iter,
        tol: t.tol,
    };
    let mut conditions = Vec::with_capacity(2 * config.m_a);
    let mut members = Vec::with_capacity(config.m_a);
    for j in 0..config.m_a {
        let freqs = data.sign_frequencies(j);
        let mut pair = Vec::with_capacity(2);
        for sign in Sign::BOTH {
            let counts = data.condition(j, sign);
            let maxlik = maxlik_with_povm(counts, &povm, &opts)?;
            let p = freqs[sign.index()];
            pair.push(&maxlik.rho.entries * c(p, 0.0));
            conditions.push(ConditionReconstruction {
                alice_phase_index: j,
                alice_sign: sign,
                frequency: p,
                total: counts.total,
                maxlik,
            });
        }
        members.push([pair[0].clone(), pair[1].clone()]);
    }
    let assemblage = Assemblage::new(config.alice_phases(), members)?;
    Ok(Reconstruction {
        assemblage,
        data,
        povm,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fidelity, loss_channel, squeezed_vacuum};
    use crate::homodyne::sample_quadrature;
    use crate::tomography::records::QuadratureRecord;

    fn records_from(rho: &DensityMatrix, phases: &[f64], per_phase: usize, seed: u64) -> Vec<QuadratureRecord> {
        let mut out = Vec::new();
        for (k, &phi) in phases.iter().enumerate() {
            let qs = sample_quadrature(rho, phi, seed + k as u64, per_phase).unwrap();
            for q in qs {
                out.push(QuadratureRecord {
                    event_id: out.len() as u64,
                    alice_phase_index: 0,
                    alice_sign: Sign::Plus,
                    bob_phase: phi,
                    bob_q: q,
                });
            }
        }
        // a single token event keeps the unused sign condition non-empty
        out.push(QuadratureRecord {
            event_id: out.len() as u64,
            alice_phase_index: 0,
            alice_sign: Sign::Minus,
            bob_phase: phases[0],
            bob_q: 0.0,
        });
        out
    }

    fn six_phases() -> Vec<f64> {
        (0..6).map(|k| k as f64 * std::f64::consts::PI / 6.0).collect()
    }

    fn fit(rho: &DensityMatrix, per_phase: usize, eta: f64, n_max: usize) -> MaxLikResult {
        let recs = records_from(rho, &six_phases(), per_phase, 5);
        let data = bin_records_for(&recs, 1, BinEdges::new(-6.0, 6.0, 100).unwrap()).unwrap();
        maxlik_reconstruct(data.slice(0, Sign::Plus), eta, n_max, &MaxLikOptions::default()).unwrap()
    }

    #[test]
    fn povm_set_is_complete() {
        let bins = BinEdges::new(-6.0, 6.0, 40).unwrap();
        let povm = PovmSet::new(6, 0.8, &bins, &[0.0, 1.0]).unwrap();
        for k in 0..2 {
            let mut acc = CMat::zeros(7, 7);
            for b in 0..40 {
                acc += povm.operator(k, b);
            }
            assert!(linalg::max_abs_diff(&acc, &CMat::identity(7, 7)) < 1e-10);
        }
    }

    #[test]
    fn vacuum_is_recovered() {
        let res = fit(&DensityMatrix::fock(0, 10), 100_000 / 6, 1.0, 10);
        let f = fidelity(&res.rho, &DensityMatrix::fock(0, 10)).unwrap();
        assert!(f >= 0.999, "{f}");
    }

    #[test]
    fn single_photon_is_recovered() {
        let res = fit(&DensityMatrix::fock(1, 10), 20_000, 1.0, 10);
        assert!(res.rho.entries[(1, 1)].re >= 0.98, "{}", res.rho.entries[(1, 1)].re);
    }

    #[test]
    fn likelihood_never_decreases() {
        let rho = DensityMatrix::from_pure(&coherent_state(c(0.8, 0.5), 12).unwrap()).resized(11).normalized().unwrap();
        let res = fit(&rho, 3000, 1.0, 10);
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn loss_corrected_recovery() {
        let sv = squeezed_vacuum(3.0, 30).unwrap();
        let truth = DensityMatrix::from_pure(&sv).resized(11).normalized().unwrap();
        let lossy = loss_channel(&DensityMatrix::from_pure(&sv), 0.85, 0).unwrap();
        let res = fit(&lossy, 20_000, 0.85, 10);
        let f = fidelity(&res.rho, &truth).unwrap();
        assert!(f >= 0.99, "{f}");
    }
}
