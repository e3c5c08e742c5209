use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::Sign;

/// One heralded event: Alice's setting and sign plus Bob's homodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub event_id: u64,
    pub alice_phase_index: usize,
    pub alice_sign: Sign,
    #[serde(rename = "bob_phase_rad")]
    pub bob_phase: f64,
    pub bob_q: f64,
}

/// Uniform bins over `[q_min, q_max]`; values outside are assigned to the edge bins,
/// and the edge POVM elements extend to infinity accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub q_min: f64,
    pub q_max: f64,
    pub n_bins: usize,
}

impl BinEdges {
    pub fn new(q_min: f64, q_max: f64, n_bins: usize) -> Result<Self> {
        if !(q_min < q_max) || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::invalid("q_range", "need finite q_min < q_max"));
        }
        if n_bins == 0 {
            return Err(Error::invalid("n_bins", "need at least one bin"));
        }
        Ok(BinEdges { q_min, q_max, n_bins })
    }

    pub fn width(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|i| self.q_min + self.width() * i as f64).collect()
    }

    /// Bin index of `q`, and whether it had to be clipped.
    pub fn locate(&self, q: f64) -> (usize, bool) {
        if q < self.q_min {
            return (0, true);
        }
        if q > self.q_max {
            return (self.n_bins - 1, true);
        }
        let i = ((q - self.q_min) / self.width()).floor() as usize;
        (i.min(self.n_bins - 1), false)
    }

    /// Integration limits of bin `i`, with the edge bins open-ended.
    pub fn limits(&self, i: usize) -> (f64, f64) {
        let e = self.edges();
        let lo = if i == 0 { f64::NEG_INFINITY } else { e[i] };
        let hi = if i + 1 == self.n_bins { f64::INFINITY } else { e[i + 1] };
        (lo, hi)
    }
}

/// Histograms of one condition `(θ_j, a)`, indexed `[bob phase][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCounts {
    pub alice_phase_index: usize,
    pub alice_sign: Sign,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl ConditionCounts {
    pub fn empty(alice_phase_index: usize, alice_sign: Sign, n_phases: usize, n_bins: usize) -> Self {
        ConditionCounts {
            alice_phase_index,
            alice_sign,
            counts: vec![vec![0; n_bins]; n_phases],
            total: 0,
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedData {
    pub bins: BinEdges,
    pub bob_phases: Vec<f64>,
    pub m_a: usize,
    /// Index `2 j + sign.index()`.
    pub conditions: Vec<ConditionCounts>,
    /// Records that fell outside the bin range and were moved to an edge bin.
    pub clipped: u64,
}

/// Data of one condition together with the binning it refers to.
#[derive(Debug, Clone, Copy)]
pub struct ConditionSlice<'a> {
    pub bins: &'a BinEdges,
    pub bob_phases: &'a [f64],
    pub counts: &'a ConditionCounts,
}

impl BinnedData {
    pub fn condition(&self, j: usize, sign: Sign) -> &ConditionCounts {
        &self.conditions[2 * j + sign.index()]
    }

    pub fn slice(&self, j: usize, sign: Sign) -> ConditionSlice<'_> {
        ConditionSlice {
            bins: &self.bins,
            bob_phases: &self.bob_phases,
            counts: self.condition(j, sign),
        }
    }

    pub fn totals(&self) -> Vec<u64> {
        self.conditions.iter().map(|c| c.total).collect()
    }

    /// `p̂(a|θ_j)`; the two entries sum to one.
    pub fn sign_frequencies(&self, j: usize) -> [f64; 2] {
        let p = self.condition(j, Sign::Plus).total as f64;
        let m = self.condition(j, Sign::Minus).total as f64;
        let plus = p / (p + m);
        [plus, 1.0 - plus]
    }
}

const PHASE_MATCH: f64 = 1e-9;

/// Bin records per condition. `m_A` is one more than the largest phase index seen;
/// every `(θ, a)` cell below it must hold at least one event.
pub fn bin_records(records: &[QuadratureRecord], q_range: (f64, f64), n_bins: usize) -> Result<BinnedData> {
    let m_a = records
        .iter()
        .map(|r| r.alice_phase_index + 1)
        .max()
        .ok_or_else(|| Error::invalid("records", "no records"))?;
    bin_records_for(records, m_a, BinEdges::new(q_range.0, q_range.1, n_bins)?)
}

pub(crate) fn bin_records_for(records: &[QuadratureRecord], m_a: usize, bins: BinEdges) -> Result<BinnedData> {
    if records.is_empty() {
        return Err(Error::invalid("records", "no records"));
    }
    let mut bob_phases: Vec<f64> = Vec::new();
    for r in records {
        if !r.bob_q.is_finite() || !r.bob_phase.is_finite() {
            return Err(Error::invalid("records", format!("event {} has a non-finite value", r.event_id)));
        }
        if r.alice_phase_index >= m_a {
            return Err(Error::invalid(
                "records",
                format!("event {} has phase index {} ≥ m_A = {m_a}", r.event_id, r.alice_phase_index),
            ));
        }
        if !bob_phases.iter().any(|p| (p - r.bob_phase).abs() < PHASE_MATCH) {
            bob_phases.push(r.bob_phase);
        }
    }
    bob_phases.sort_by(f64::total_cmp);
    let mut conditions: Vec<ConditionCounts> = (0..m_a)
        .flat_map(|j| Sign::BOTH.map(|s| ConditionCounts::empty(j, s, bob_phases.len(), bins.n_bins)))
        .collect();
    let mut clipped = 0;
    for r in records {
        let k = bob_phases
            .iter()
            .position(|p| (p - r.bob_phase).abs() < PHASE_MATCH)
            .expect("phase collected above");
        let (b, clip) = bins.locate(r.bob_q);
        clipped += u64::from(clip);
        let cond = &mut conditions[2 * r.alice_phase_index + r.alice_sign.index()];
        cond.counts[k][b] += 1;
        cond.total += 1;
    }
    for c in &conditions {
        if c.total == 0 {
            return Err(Error::EmptyCondition {
                phase_index: c.alice_phase_index,
                sign: c.alice_sign.value() as i8,
            });
        }
    }
    Ok(BinnedData {
        bins,
        bob_phases,
        m_a,
        conditions,
        clipped,
    })
}
