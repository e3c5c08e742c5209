//! Quadrature wavefunctions, sign-binned homodyne POVMs and quadrature sampling.
//!
//! Phase convention (see [`crate::fock`]): `<q_theta|n> = e^{i n theta} psi_n(q)`,
//! so `<m|M_{+|theta}|n> = e^{i theta (n - m)} ∫_0^∞ psi_m psi_n dq`. The
//! off-diagonal `<0|M_{+|0}|1> = 1/√(2π)` is what fixes vacuum variance 1/2.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::linalg::{c, cis, CMat};
use crate::quadrature::{gauss_hermite, gauss_legendre};

/// Outcome of a sign-binned quadrature measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// 0 for `+`, 1 for `-`; the slot used in `[_; 2]` member arrays.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Sign {
        if i == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn of(q: f64) -> Sign {
        if q >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Hermite functions `psi_0..=psi_{n_max}` at `q` by the stable three-term recurrence.
pub fn wavefunctions(n_max: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-q * q / 2.0).exp();
    out.push(psi0);
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * q * psi0);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `psi_n(q) = H_n(q) e^{-q²/2} / √(2^n n! √π)`.
pub fn quadrature_wavefunction(n: usize, q: f64) -> f64 {
    wavefunctions(n, q)[n]
}

fn overlap_upper_limit(n_max: usize) -> f64 {
    (2.0 * n_max as f64 + 1.0).sqrt() + 9.0
}

/// `∫_a^b psi_m psi_n dq` for all `m, n ≤ n_max` with a fixed composite rule.
pub fn interval_overlaps(n_max: usize, a: f64, b: f64, panels: usize) -> DMatrix<f64> {
    let rule = gauss_legendre(16);
    let d = n_max + 1;
    let mut acc = DMatrix::<f64>::zeros(d, d);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let psi = wavefunctions(n_max, mid + 0.5 * h * x);
            let wt = 0.5 * h * w;
            for m in 0..d {
                let pm = psi[m] * wt;
                for n in m..d {
                    acc[(m, n)] += pm * psi[n];
                }
            }
        }
    }
    for m in 0..d {
        for n in 0..m {
            acc[(m, n)] = acc[(n, m)];
        }
    }
    acc
}

/// Cached half-line integrals `∫_0^∞ psi_m psi_n dq`, refined by panel doubling
/// until successive estimates agree to 1e-13.
#[derive(Debug, Clone)]
pub struct HalfLineTable {
    pub n_max: usize,
    pub values: DMatrix<f64>,
}

impl HalfLineTable {
    pub fn new(n_max: usize) -> Self {
        let upper = overlap_upper_limit(n_max);
        let mut panels = 8;
        let mut prev = interval_overlaps(n_max, 0.0, upper, panels);
        loop {
            panels *= 2;
            let next = interval_overlaps(n_max, 0.0, upper, panels);
            let diff = (&next - &prev).abs().max();
            prev = next;
            if diff < 1e-13 || panels >= 1024 {
                break;
            }
        }
        HalfLineTable { n_max, values: prev }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// One element `M_{a|theta}` of Alice's sign-binned measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPovmElement {
    pub operator: CMat,
    pub phase: f64,
    pub sign: Sign,
    pub phase_noise_sigma: f64,
}

impl BinnedPovmElement {
    pub fn dim(&self) -> usize {
        self.operator.nrows()
    }
}

/// Sign-binned element from a precomputed table.
pub fn halfline_povm_from(table: &HalfLineTable, theta: f64, sign: Sign) -> BinnedPovmElement {
    let d = table.dim();
    let plus = CMat::from_fn(d, d, |m, n| cis(theta * (n as f64 - m as f64)) * table.values[(m, n)]);
    let operator = match sign {
        Sign::Plus => plus,
        Sign::Minus => CMat::identity(d, d) - plus,
    };
    BinnedPovmElement {
        operator,
        phase: theta,
        sign,
        phase_noise_sigma: 0.0,
    }
}

pub fn halfline_povm(theta: f64, sign: Sign, n_max: usize) -> BinnedPovmElement {
    halfline_povm_from(&HalfLineTable::new(n_max), theta, sign)
}

const PHASE_NOISE_NODES: usize = 64;

/// Average of `family(theta + eps)` over `eps ~ N(0, sigma²)` by Gauss–Hermite quadrature.
pub fn smear_phase<F>(family: F, theta: f64, sigma: f64) -> Result<BinnedPovmElement>
where
    F: Fn(f64) -> BinnedPovmElement,
{
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::invalid("sigma", "phase noise must be finite and non-negative"));
    }
    let centre = family(theta);
    if sigma == 0.0 {
        return Ok(centre);
    }
    let rule = gauss_hermite(PHASE_NOISE_NODES);
    let d = centre.dim();
    let mut acc = CMat::zeros(d, d);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let el = family(theta + std::f64::consts::SQRT_2 * sigma * x);
        acc += el.operator * c(*w, 0.0);
    }
    acc /= c(std::f64::consts::PI.sqrt(), 0.0);
    Ok(BinnedPovmElement {
        operator: acc,
        phase: theta,
        sign: centre.sign,
        phase_noise_sigma: sigma,
    })
}

/// Sign-binned element including Gaussian phase jitter of standard deviation `sigma`.
pub fn noisy_halfline_povm(table: &HalfLineTable, theta: f64, sign: Sign, sigma: f64) -> Result<BinnedPovmElement> {
    smear_phase(|t| halfline_povm_from(table, t, sign), theta, sigma)
}

/// Homodyne distribution `p(q|theta) = <q_theta| rho |q_theta>` of a single-mode state.
#[derive(Debug, Clone)]
pub struct QuadratureDistribution {
    kernel: DMatrix<f64>,
    n_max: usize,
}

impl QuadratureDistribution {
    pub fn new(rho: &DensityMatrix, theta: f64) -> Result<Self> {
        if rho.n_modes() != 1 {
            return Err(Error::DimensionMismatch("quadrature_pdf needs a single-mode state".into()));
        }
        let d = rho.dim();
        let kernel = DMatrix::from_fn(d, d, |m, n| (rho.entries[(m, n)] * cis(theta * (m as f64 - n as f64))).re);
        Ok(QuadratureDistribution { kernel, n_max: d - 1 })
    }

    pub fn pdf(&self, q: f64) -> f64 {
        let psi = wavefunctions(self.n_max, q);
        let d = psi.len();
        let mut s = 0.0;
        for m in 0..d {
            let mut row = 0.0;
            for n in 0..d {
                row += self.kernel[(m, n)] * psi[n];
            }
            s += psi[m] * row;
        }
        s
    }

    pub fn sampler(&self) -> InverseCdf {
        InverseCdf::tabulate(|q| self.pdf(q), -8.0, 8.0, 0.005)
    }
}

pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64) -> Result<QuadratureDistribution> {
    QuadratureDistribution::new(rho, theta)
}

/// Piecewise-linear inverse CDF over a tabulated density.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn tabulate(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Self {
        let n = ((hi - lo) / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
        let dens: Vec<f64> = grid.iter().map(|&q| pdf(q).max(0.0)).collect();
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        for i in 1..grid.len() {
            let prev = cdf[i - 1];
            cdf.push(prev + 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]));
        }
        let total = *cdf.last().unwrap();
        for v in cdf.iter_mut() {
            *v /= total;
        }
        InverseCdf { grid, cdf }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&v| v <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (g0, g1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 > c0 {
            g0 + (u - c0) / (c1 - c0) * (g1 - g0)
        } else {
            g0
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// `n` i.i.d. homodyne outcomes, deterministic for a given seed.
pub fn sample_quadrature(rho: &DensityMatrix, theta: f64, rng_seed: u64, n: usize) -> Result<Vec<f64>> {
    let sampler = QuadratureDistribution::new(rho, theta)?.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}
