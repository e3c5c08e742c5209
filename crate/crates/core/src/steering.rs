//! LHS membership, optimal steering functionals and parameter sweeps.
//!
//! A steering functional `{F_{a|θ}}` satisfies `Σ_θ D_λ(a|θ) F_{a|θ} ⪰ 0` for every
//! deterministic strategy `λ`, so `S = Σ Tr[F σ] ≥ 0` for every assemblage with a
//! local-hidden-state model. Functionals are normalized by `−𝟙 ⪯ F ⪯ 𝟙`.

use serde::{Deserialize, Serialize};

use crate::assemblage::{compute_assemblage, Assemblage};
use crate::error::{Error, Result};
use crate::homodyne::Sign;
use crate::linalg::{self, c, CMat};
use crate::photonics::{shared_state, ExperimentConfig};
use crate::sdp::{self, BlockSdp, SolverOptions, Term};

pub use crate::sdp::SdpStatus;

/// Tag recorded with every functional produced under `−𝟙 ⪯ F ⪯ 𝟙`.
pub const UNIT_OPERATOR_NORM: &str = "unit-operator-norm";

pub const MAX_SETTINGS: usize = 16;

/// Tolerance for `S_min < 0` to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-7;

/// Tolerance on the shift `t` for LHS membership.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// All `2^m` deterministic sign assignments. Bit `j` of `λ` set means `−` at setting `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategyTable {
    m_a: usize,
}

impl DeterministicStrategyTable {
    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn len(&self) -> usize {
        1 << self.m_a
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sign(&self, lambda: usize, setting: usize) -> Sign {
        if lambda >> setting & 1 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// `D_λ(a|θ_j) ∈ {0, 1}`
    pub fn entry(&self, lambda: usize, setting: usize, sign: Sign) -> u8 {
        u8::from(self.sign(lambda, setting) == sign)
    }

    pub fn strategies_with(&self, setting: usize, sign: Sign) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&l| self.sign(l, setting) == sign)
    }
}

pub fn enumerate_strategies(m_a: usize) -> Result<DeterministicStrategyTable> {
    if m_a == 0 {
        return Err(Error::invalid("m_A", "need at least one setting"));
    }
    if m_a > MAX_SETTINGS {
        return Err(Error::TooManyStrategies(m_a));
    }
    Ok(DeterministicStrategyTable { m_a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringFunctional {
    /// `operators[j][s]` is `F_{s|θ_j}`.
    pub operators: Vec<[CMat; 2]>,
    pub normalization_tag: String,
}

impl SteeringFunctional {
    pub fn zero(m_a: usize, dim: usize) -> Self {
        SteeringFunctional {
            operators: vec![[CMat::zeros(dim, dim), CMat::zeros(dim, dim)]; m_a],
            normalization_tag: UNIT_OPERATOR_NORM.to_string(),
        }
    }

    pub fn m_a(&self) -> usize {
        self.operators.len()
    }

    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, |o| o[0].nrows())
    }

    pub fn operator(&self, j: usize, sign: Sign) -> &CMat {
        &self.operators[j][sign.index()]
    }

    /// `Σ_j F_{λ(j)|θ_j}`
    pub fn strategy_sum(&self, table: &DeterministicStrategyTable, lambda: usize) -> CMat {
        let d = self.dim();
        let mut acc = CMat::zeros(d, d);
        for j in 0..self.m_a() {
            acc += self.operator(j, table.sign(lambda, j));
        }
        acc
    }

    /// Smallest eigenvalue over all strategy sums (≥ 0 for a valid certificate).
    pub fn min_strategy_eigenvalue(&self) -> Result<f64> {
        let table = enumerate_strategies(self.m_a())?;
        Ok((0..table.len())
            .map(|l| linalg::min_eigenvalue(&self.strategy_sum(&table, l)))
            .fold(f64::INFINITY, f64::min))
    }

    /// Largest operator norm of any `F_{a|θ}`.
    pub fn max_operator_norm(&self) -> f64 {
        self.operators
            .iter()
            .flatten()
            .map(|f| {
                let ev = linalg::hermitian_eigenvalues(f);
                ev.first().map_or(0.0, |v| v.abs()).max(ev.last().map_or(0.0, |v| v.abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Re-check positivity and normalization by eigendecomposition.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let lmin = self.min_strategy_eigenvalue()?;
        if lmin < -tol {
            return Err(Error::NumericalFailure(format!("strategy sum has eigenvalue {lmin:e}")));
        }
        let norm = self.max_operator_norm();
        if norm > 1.0 + tol {
            return Err(Error::NumericalFailure(format!("functional operator norm {norm} exceeds 1")));
        }
        Ok(())
    }

    /// `V F V†` for every operator.
    pub fn embedded(&self, v: &CMat) -> SteeringFunctional {
        SteeringFunctional {
            operators: self.operators.iter().map(|[p, m]| [v * p * v.adjoint(), v * m * v.adjoint()]).collect(),
            normalization_tag: self.normalization_tag.clone(),
        }
    }

    /// Orthogonal projection onto functionals whose per-setting sums `F_{+|θ} + F_{−|θ}`
    /// all agree. Strategy sums are unchanged, and on non-signaling assemblages so is
    /// `S`; evaluated on any assemblage it equals `S` of that assemblage's
    /// non-signaling projection.
    pub fn signaling_blind(&self) -> SteeringFunctional {
        let d = self.dim();
        let m = self.m_a() as f64;
        let sums: Vec<CMat> = self.operators.iter().map(|[p, q]| p + q).collect();
        let mean = sums.iter().fold(CMat::zeros(d, d), |acc, s| acc + s) / c(m, 0.0);
        SteeringFunctional {
            operators: self
                .operators
                .iter()
                .zip(&sums)
                .map(|([p, q], s)| {
                    let shift = (&mean - s) * c(0.5, 0.0);
                    [p + &shift, q + &shift]
                })
                .collect(),
            normalization_tag: self.normalization_tag.clone(),
        }
    }

    /// Smallest convex shrink toward `𝟙/m` that restores both constraint families.
    fn repaired(mut self) -> Result<SteeringFunctional> {
        let norm = self.max_operator_norm();
        if norm > 1.0 {
            for f in self.operators.iter_mut().flatten() {
                *f /= c(norm, 0.0);
            }
        }
        let eps = (-self.min_strategy_eigenvalue()?).max(0.0);
        if eps > 0.0 {
            let m = self.m_a() as f64;
            let d = self.dim();
            let shift = CMat::identity(d, d) * c(eps / m, 0.0);
            let scale = c(1.0 / (1.0 + eps / m), 0.0);
            for f in self.operators.iter_mut().flatten() {
                *f = (&*f + &shift) * scale;
            }
        }
        Ok(self)
    }
}

/// `S = Σ_{a,θ} Tr[F_{a|θ} σ_{a|θ}]`
pub fn evaluate_functional(functional: &SteeringFunctional, assemblage: &Assemblage) -> Result<f64> {
    if functional.m_a() != assemblage.m_a() || functional.dim() != assemblage.dim() {
        return Err(Error::DimensionMismatch(format!(
            "functional is {}×{}, assemblage is {}×{}",
            functional.m_a(),
            functional.dim(),
            assemblage.m_a(),
            assemblage.dim()
        )));
    }
    Ok(assemblage
        .iter()
        .map(|(j, s, sigma)| linalg::trace_product_re(functional.operator(j, s), sigma))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Functional(SteeringFunctional),
    /// `σ_λ` in strategy order. Members are PSD only when `t ≥ 0`.
    Decomposition { states: Vec<CMat>, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpResult {
    pub status: SdpStatus,
    /// `S_min` for functionals; the shift `t` for membership.
    pub objective: f64,
    pub duality_gap: f64,
    /// Dimension Bob's space was reduced to before solving.
    pub dim: usize,
    pub iterations: usize,
    /// Trace-norm signaling of the input (membership only projects it away).
    pub signaling_residual: f64,
    pub certificate: Certificate,
}

impl SdpResult {
    pub fn functional(&self) -> Option<&SteeringFunctional> {
        match &self.certificate {
            Certificate::Functional(f) => Some(f),
            Certificate::Decomposition { .. } => None,
        }
    }

    pub fn is_member(&self) -> Option<bool> {
        match &self.certificate {
            Certificate::Decomposition { t, .. } => Some(*t >= -MEMBERSHIP_TOL),
            Certificate::Functional(_) => None,
        }
    }

    pub fn certifies_steering(&self) -> bool {
        match &self.certificate {
            Certificate::Functional(_) => self.objective < -VIOLATION_TOL,
            Certificate::Decomposition { t, .. } => *t < -MEMBERSHIP_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    /// Largest fraction of any member's trace allowed outside the reduced space.
    pub trace_capture: f64,
    pub solver: SolverOptions,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            trace_capture: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

/// Isometry onto the fewest leading eigenvectors of the averaged state that keep
/// every member's lost trace within `capture` of its trace.
pub fn leading_subspace(assemblage: &Assemblage, capture: f64) -> CMat {
    let mean = assemblage.mean_unconditioned();
    let (_, vecs) = linalg::hermitian_eigen(&mean);
    let n = mean.nrows();
    let traces: Vec<f64> = assemblage.iter().map(|(_, _, m)| linalg::trace(m).re).collect();
    // captured weight of each member as leading vectors are added
    let mut kept = vec![0.0; traces.len()];
    for k in 1..=n {
        let v = vecs.column(n - k).into_owned();
        for (idx, (_, _, m)) in assemblage.iter().enumerate() {
            kept[idx] += (v.adjoint() * m * &v)[(0, 0)].re;
        }
        let ok = kept.iter().zip(&traces).all(|(k, t)| t - k <= capture * t.abs().max(1e-300));
        if ok {
            return reversed_columns(&vecs, k);
        }
    }
    CMat::identity(n, n)
}

fn reversed_columns(vecs: &CMat, k: usize) -> CMat {
    let n = vecs.nrows();
    CMat::from_fn(n, k, |r, col| vecs[(r, n - 1 - col)])
}

fn reduce(assemblage: &Assemblage, settings: &SdpSettings) -> (CMat, Assemblage) {
    let v = leading_subspace(assemblage, settings.trace_capture);
    let reduced = assemblage.map_members(|m| linalg::hermitian_part(&(v.adjoint() * m * &v)));
    (v, reduced)
}

pub fn optimal_functional(assemblage: &Assemblage) -> Result<SdpResult> {
    optimal_functional_with(assemblage, &SdpSettings::default())
}

pub fn optimal_functional_with(assemblage: &Assemblage, settings: &SdpSettings) -> Result<SdpResult> {
    let table = enumerate_strategies(assemblage.m_a())?;
    let (v, reduced) = reduce(assemblage, settings);
    let d = reduced.dim();
    let m = reduced.m_a();
    let dd = d * d;
    let n_strat = table.len();
    let n_k = 2 * m;
    let upper = |k: usize| n_strat + 2 * k;
    let lower = |k: usize| n_strat + 2 * k + 1;

    let mut block_dims = vec![d; n_strat + 2 * n_k];
    block_dims.shrink_to_fit();
    let mut cost = vec![CMat::zeros(d, d); n_strat];
    cost.extend((0..2 * n_k).map(|_| CMat::identity(d, d)));
    let mut a = Vec::with_capacity(n_k * dd);
    let mut b = Vec::with_capacity(n_k * dd);
    for j in 0..m {
        for sign in Sign::BOTH {
            let k = 2 * j + sign.index();
            let coords = linalg::hermitian_coords(reduced.member(j, sign));
            let lambdas: Vec<usize> = table.strategies_with(j, sign).collect();
            for p in 0..dd {
                let mut terms: Vec<Term> = lambdas.iter().map(|&l| Term { block: l, basis: p, coef: -1.0 }).collect();
                terms.push(Term { block: upper(k), basis: p, coef: 1.0 });
                terms.push(Term { block: lower(k), basis: p, coef: -1.0 });
                a.push(terms);
                b.push(-coords[p]);
            }
        }
    }
    let problem = BlockSdp { block_dims, c: cost, a, b };
    let sol = sdp::solve(&problem, &settings.solver)?;

    let operators = (0..m)
        .map(|j| {
            let f = |s: usize| linalg::from_hermitian_coords(&sol.y[(2 * j + s) * dd..(2 * j + s + 1) * dd], d);
            [f(0), f(1)]
        })
        .collect();
    let functional = SteeringFunctional {
        operators,
        normalization_tag: UNIT_OPERATOR_NORM.to_string(),
    }
    .repaired()?
    .embedded(&v);
    let objective = evaluate_functional(&functional, assemblage)?;
    Ok(SdpResult {
        status: sol.status,
        objective,
        duality_gap: sol.relative_gap,
        dim: d,
        iterations: sol.iterations,
        signaling_residual: assemblage.signaling_residual(),
        certificate: Certificate::Functional(functional),
    })
}

pub fn lhs_membership(assemblage: &Assemblage) -> Result<SdpResult> {
    lhs_membership_with(assemblage, &SdpSettings::default())
}

/// Maximize `t` over `σ_λ − t𝟙 ⪰ 0` with `Σ_λ D_λ(a|θ) σ_λ = σ_{a|θ}`.
///
/// The input is first replaced by its nearest non-signaling assemblage; the removed
/// residual is reported in the result.
pub fn lhs_membership_with(assemblage: &Assemblage, settings: &SdpSettings) -> Result<SdpResult> {
    let table = enumerate_strategies(assemblage.m_a())?;
    let residual = assemblage.signaling_residual();
    let projected = assemblage.nonsignaling_projection();
    let (v, reduced) = reduce(&projected, settings);
    let d = reduced.dim();
    let m = reduced.m_a();
    let dd = d * d;
    let n_strat = table.len();
    let tau_block = n_strat;
    let t0 = linalg::trace(&reduced.mean_unconditioned()).re.max(1e-12);
    let mult = (n_strat / 2) as f64;

    let mut block_dims = vec![d; n_strat];
    block_dims.push(1);
    let mut cost = vec![CMat::zeros(d, d); n_strat];
    cost.push(CMat::from_element(1, 1, c(-1.0, 0.0)));
    let mut rows: Vec<(usize, Sign)> = (0..m).map(|j| (j, Sign::Plus)).collect();
    rows.push((0, Sign::Minus));
    let mut a = Vec::with_capacity(rows.len() * dd);
    let mut b = Vec::with_capacity(rows.len() * dd);
    for &(j, sign) in &rows {
        let coords = linalg::hermitian_coords(reduced.member(j, sign));
        let lambdas: Vec<usize> = table.strategies_with(j, sign).collect();
        for p in 0..dd {
            let mut terms: Vec<Term> = lambdas.iter().map(|&l| Term { block: l, basis: p, coef: 1.0 }).collect();
            let mut rhs = coords[p];
            if p < d {
                terms.push(Term { block: tau_block, basis: 0, coef: mult });
                rhs += mult * t0;
            }
            a.push(terms);
            b.push(rhs);
        }
    }
    let problem = BlockSdp { block_dims, c: cost, a, b };
    let sol = sdp::solve(&problem, &settings.solver)?;
    let t = sol.x[tau_block][(0, 0)].re - t0;
    let shift = CMat::identity(d, d) * c(t, 0.0);
    let states = sol.x[..n_strat]
        .iter()
        .map(|x| {
            let s = x + &shift;
            &v * s * v.adjoint()
        })
        .collect();
    Ok(SdpResult {
        status: sol.status,
        objective: t,
        duality_gap: sol.relative_gap,
        dim: d,
        iterations: sol.iterations,
        signaling_residual: residual,
        certificate: Certificate::Decomposition { states, t },
    })
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "m_A")]
    MA,
    R,
    #[serde(rename = "eta_A")]
    EtaA,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m_A" | "m_a" => Ok(SweepAxis::MA),
            "R" | "r" => Ok(SweepAxis::R),
            "eta_A" | "eta_a" => Ok(SweepAxis::EtaA),
            other => Err(Error::invalid("axis", format!("unknown sweep axis `{other}` (m_A, R, eta_A)"))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::MA => "m_A",
            SweepAxis::R => "R",
            SweepAxis::EtaA => "eta_A",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub s_min: f64,
    pub status: SdpStatus,
    pub gap: f64,
    pub dim: usize,
    /// Beam-splitter ratio used for this point.
    pub r: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Search the ratio in `[0.05, 0.95]` at every point (ignored on the R axis).
    pub optimize_r: bool,
    pub r_tolerance: f64,
    pub sdp: SdpSettings,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            optimize_r: true,
            r_tolerance: 1e-3,
            sdp: SdpSettings::default(),
        }
    }
}

/// State → losses → assemblage → optimal functional for one configuration.
pub fn solve_config(config: &ExperimentConfig, settings: &SdpSettings) -> Result<SdpResult> {
    config.validate()?;
    let rho = shared_state(config)?;
    let asm = compute_assemblage(&rho, &config.alice_phases(), config.phase_noise_sigma())?;
    optimal_functional_with(&asm, settings)
}

/// Golden-section minimization of `S_min` over the ratio on `[lo, hi]`.
pub fn optimize_ratio(config: &ExperimentConfig, lo: f64, hi: f64, tol: f64, settings: &SdpSettings) -> Result<(f64, SdpResult)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |r: f64| -> Result<SdpResult> {
        let mut cfg = config.clone();
        cfg.r = r;
        solve_config(&cfg, settings)
    };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > tol {
        if f1.objective <= f2.objective {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2)?;
        }
    }
    Ok(if f1.objective <= f2.objective { (x1, f1) } else { (x2, f2) })
}

pub fn sweep(template: &ExperimentConfig, axis: SweepAxis, values: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let mut cfg = template.clone();
            match axis {
                SweepAxis::MA => {
                    if value < 1.0 || value.fract() != 0.0 {
                        return Err(Error::invalid("m_A", format!("{value} is not a positive integer")));
                    }
                    cfg.m_a = value as usize;
                }
                SweepAxis::R => cfg.r = value,
                SweepAxis::EtaA => cfg.eta_a = value,
            }
            cfg.validate()?;
            let (r, res) = if opts.optimize_r && axis != SweepAxis::R {
                optimize_ratio(&cfg, 0.05, 0.95, opts.r_tolerance, &opts.sdp)?
            } else {
                (cfg.r, solve_config(&cfg, &opts.sdp)?)
            };
            Ok(SweepRow {
                axis_value: value,
                s_min: res.objective,
                status: res.status,
                gap: res.duality_gap,
                dim: res.dim,
                r,
            })
        })
        .collect()
}

/// Indices where `S_min` increases by more than `tol` from the previous row.
pub fn monotonicity_violations(rows: &[SweepRow], tol: f64) -> Vec<usize> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].s_min > w[0].s_min + tol)
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::ideal_assemblage;
    use crate::fock::{coherent_state, DensityMatrix};

    fn phases(m: usize) -> Vec<f64> {
        (0..m).map(|n| n as f64 * std::f64::consts::PI / m as f64).collect()
    }

    fn ideal(m: usize) -> Assemblage {
        ideal_assemblage(0.36, c(1.0, 0.0), &phases(m), 12).unwrap()
    }

    #[test]
    fn strategy_counts() {
        assert_eq!(enumerate_strategies(1).unwrap().len(), 2);
        let t = enumerate_strategies(2).unwrap();
        assert_eq!(t.len(), 4);
        for l in 0..4 {
            for j in 0..2 {
                assert_eq!(t.entry(l, j, Sign::Plus) + t.entry(l, j, Sign::Minus), 1);
            }
        }
        assert_eq!(enumerate_strategies(6).unwrap().len(), 64);
        assert!(matches!(enumerate_strategies(17), Err(Error::TooManyStrategies(17))));
    }

    #[test]
    fn ideal_assemblage_is_steerable() {
        let asm = ideal(6);
        let res = optimal_functional(&asm).unwrap();
        assert_eq!(res.status, SdpStatus::Optimal);
        assert!(res.objective < -1e-3, "{}", res.objective);
        res.functional().unwrap().verify(1e-7).unwrap();
        let mem = lhs_membership(&asm).unwrap();
        assert_eq!(mem.is_member(), Some(false));
    }

    #[test]
    fn dephased_assemblage_is_member() {
        // zeroing all coherences leaves diagonal, commuting members
        let asm = ideal(6).map_members(|m| CMat::from_diagonal(&m.diagonal()));
        let mem = lhs_membership(&asm).unwrap();
        assert_eq!(mem.is_member(), Some(true), "t = {}", mem.objective);
        let f = optimal_functional(&asm).unwrap();
        assert!(f.objective.abs() < 1e-7, "{}", f.objective);
    }

    #[test]
    fn product_assemblage_recovers_product() {
        let rho_a = DensityMatrix::from_pure(&coherent_state(c(0.4, 0.2), 8).unwrap()).resized(4).normalized().unwrap();
        let rho_b = DensityMatrix::from_pure(&coherent_state(c(0.7, -0.3), 10).unwrap());
        let asm = compute_assemblage(&rho_a.tensor(&rho_b), &phases(3), 0.0).unwrap();
        let mem = lhs_membership(&asm).unwrap();
        assert_eq!(mem.is_member(), Some(true));
        let Certificate::Decomposition { states, .. } = &mem.certificate else { panic!() };
        let total: CMat = states.iter().fold(CMat::zeros(asm.dim(), asm.dim()), |acc, s| acc + s);
        assert!(linalg::max_abs_diff(&total, &rho_b.entries) < 1e-6);
        let table = enumerate_strategies(3).unwrap();
        for (l, s) in states.iter().enumerate() {
            let mu = linalg::trace(s).re;
            assert!(linalg::max_abs_diff(s, &(&rho_b.entries * c(mu, 0.0))) < 1e-5, "λ={l}");
        }
        // reconstruct a member from the decomposition
        let sum: CMat = table.strategies_with(1, Sign::Minus).fold(CMat::zeros(asm.dim(), asm.dim()), |acc, l| acc + &states[l]);
        assert!(linalg::max_abs_diff(&sum, asm.member(1, Sign::Minus)) < 1e-6);
    }

    #[test]
    fn functional_objective_matches_evaluation() {
        let asm = ideal(4);
        let res = optimal_functional(&asm).unwrap();
        let s = evaluate_functional(res.functional().unwrap(), &asm).unwrap();
        assert!((s - res.objective).abs() < 1e-7);
        let zero = SteeringFunctional::zero(4, asm.dim());
        assert_eq!(evaluate_functional(&zero, &asm).unwrap(), 0.0);
        assert!(evaluate_functional(&SteeringFunctional::zero(3, asm.dim()), &asm).is_err());
    }

    #[test]
    fn scale_and_rotation_covariance() {
        let asm = ideal(4);
        let s1 = optimal_functional(&asm).unwrap().objective;
        let s2 = optimal_functional(&asm.scaled(2.0)).unwrap().objective;
        assert!((s2 - 2.0 * s1).abs() < 1e-7, "{s2} vs {s1}");
        let d = asm.dim();
        let u = CMat::from_fn(d, d, |r, col| if r == col { linalg::cis(0.3 * r as f64) } else { c(0.0, 0.0) });
        let s3 = optimal_functional(&asm.conjugated(&u)).unwrap().objective;
        assert!((s3 - s1).abs() < 1e-7);
    }

    #[test]
    fn dropping_settings_cannot_lower_s() {
        let asm = ideal(4);
        let full = optimal_functional(&asm).unwrap().objective;
        let sub = optimal_functional(&asm.restricted(&[0, 2])).unwrap().objective;
        assert!(sub >= full - 1e-7);
    }

    #[test]
    fn certificates_hold_on_product_states() {
        let asm = ideal(3);
        let f = optimal_functional(&asm).unwrap();
        let f = f.functional().unwrap();
        for k in 0..5 {
            let beta = c(0.3 * k as f64, 0.1 * k as f64 - 0.2);
            let rho_a = DensityMatrix::from_pure(&coherent_state(beta, 16).unwrap()).resized(2).normalized().unwrap();
            let rho_b = DensityMatrix::from_pure(&coherent_state(beta * 0.5, 12).unwrap());
            let prod = compute_assemblage(&rho_a.tensor(&rho_b), &phases(3), 0.0).unwrap();
            assert!(evaluate_functional(f, &prod).unwrap() >= -1e-7);
        }
    }

    #[test]
    fn signaling_blind_functional_keeps_strategy_sums() {
        let asm = ideal(3);
        let f = optimal_functional(&asm).unwrap();
        let f = f.functional().unwrap();
        let g = f.signaling_blind();
        let table = enumerate_strategies(3).unwrap();
        for l in 0..table.len() {
            assert!(linalg::max_abs_diff(&f.strategy_sum(&table, l), &g.strategy_sum(&table, l)) < 1e-12);
        }
        let mut signaling = asm.clone();
        signaling.members[1][0] *= c(1.3, 0.0);
        let direct = evaluate_functional(&g, &signaling).unwrap();
        let projected = evaluate_functional(f, &signaling.nonsignaling_projection()).unwrap();
        assert!((direct - projected).abs() < 1e-12);
        assert!((evaluate_functional(&g, &asm).unwrap() - evaluate_functional(f, &asm).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn axis_names_parse() {
        assert_eq!("m_A".parse::<SweepAxis>().unwrap(), SweepAxis::MA);
        assert_eq!("eta_A".parse::<SweepAxis>().unwrap(), SweepAxis::EtaA);
        assert!("phi".parse::<SweepAxis>().is_err());
    }
}
