//! Bob's conditional states `sigma_{a|theta}` and the non-signaling check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{cat_state, fidelity, Cutoff, DensityMatrix, Parity};
use crate::homodyne::{noisy_halfline_povm, HalfLineTable, Sign};
use crate::linalg::{self, c, cis, CMat};

/// Unnormalized conditional states indexed by Alice's setting and outcome.
/// `members[j][s]` is `sigma_{s|theta_j}` with `s` = [`Sign::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    pub phases: Vec<f64>,
    pub members: Vec<[CMat; 2]>,
}

impl Assemblage {
    pub fn new(phases: Vec<f64>, members: Vec<[CMat; 2]>) -> Result<Self> {
        if phases.len() != members.len() || phases.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases but {} member pairs",
                phases.len(),
                members.len()
            )));
        }
        let d = members[0][0].nrows();
        if members.iter().flatten().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::DimensionMismatch("members differ in dimension".into()));
        }
        Ok(Assemblage { phases, members })
    }

    pub fn m_a(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.members[0][0].nrows()
    }

    pub fn member(&self, j: usize, sign: Sign) -> &CMat {
        &self.members[j][sign.index()]
    }

    /// `p(a|theta_j) = Tr sigma_{a|theta_j}`
    pub fn probability(&self, j: usize, sign: Sign) -> f64 {
        linalg::trace(self.member(j, sign)).re
    }

    /// `sigma_{theta_j} = sum_a sigma_{a|theta_j}`
    pub fn unconditioned(&self, j: usize) -> CMat {
        &self.members[j][0] + &self.members[j][1]
    }

    /// Average of the unconditioned states over all settings.
    pub fn mean_unconditioned(&self) -> CMat {
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for j in 0..self.m_a() {
            acc += self.unconditioned(j);
        }
        acc / c(self.m_a() as f64, 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Sign, &CMat)> {
        self.members
            .iter()
            .enumerate()
            .flat_map(|(j, pair)| pair.iter().enumerate().map(move |(s, m)| (j, Sign::from_index(s), m)))
    }

    pub fn map_members(&self, f: impl Fn(&CMat) -> CMat) -> Assemblage {
        Assemblage {
            phases: self.phases.clone(),
            members: self.members.iter().map(|[p, m]| [f(p), f(m)]).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Assemblage {
        self.map_members(|m| m * c(factor, 0.0))
    }

    /// `U sigma U^dagger` for every member.
    pub fn conjugated(&self, u: &CMat) -> Assemblage {
        self.map_members(|m| u * m * u.adjoint())
    }

    /// Keep only the listed settings.
    pub fn restricted(&self, settings: &[usize]) -> Assemblage {
        Assemblage {
            phases: settings.iter().map(|&j| self.phases[j]).collect(),
            members: settings.iter().map(|&j| self.members[j].clone()).collect(),
        }
    }

    /// Largest deviation of the member-pair sums from their average, in trace norm.
    pub fn signaling_residual(&self) -> f64 {
        let mean = self.mean_unconditioned();
        (0..self.m_a())
            .map(|j| linalg::trace_norm(&(self.unconditioned(j) - &mean)))
            .fold(0.0, f64::max)
    }

    /// Nearest assemblage (member-wise) whose unconditioned states all equal the mean.
    pub fn nonsignaling_projection(&self) -> Assemblage {
        let mean = self.mean_unconditioned();
        Assemblage {
            phases: self.phases.clone(),
            members: (0..self.m_a())
                .map(|j| {
                    let shift = (&mean - self.unconditioned(j)) * c(0.5, 0.0);
                    [&self.members[j][0] + &shift, &self.members[j][1] + &shift]
                })
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Assemblage) -> f64 {
        self.members
            .iter()
            .flatten()
            .zip(other.members.iter().flatten())
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

fn check_phases(phases: &[f64]) -> Result<()> {
    if phases.is_empty() {
        return Err(Error::invalid("phases", "need at least one setting"));
    }
    let pi = std::f64::consts::PI;
    for (i, a) in phases.iter().enumerate() {
        for b in &phases[i + 1..] {
            let d = (a - b).rem_euclid(pi);
            if d.min(pi - d) < 1e-9 {
                return Err(Error::invalid(
                    "phases",
                    format!("settings {a} and {b} coincide modulo π (sign-swapped duplicates)"),
                ));
            }
        }
    }
    Ok(())
}

/// `sigma_{a|theta} = Tr_A[(M_{a|theta} ⊗ 1) rho_AB]` with phase-noise-smeared
/// sign-binned POVMs on Alice's mode.
pub fn compute_assemblage(rho_ab: &DensityMatrix, phases: &[f64], phase_noise_sigma: f64) -> Result<Assemblage> {
    if rho_ab.n_modes() != 2 {
        return Err(Error::DimensionMismatch("compute_assemblage needs a two-mode state".into()));
    }
    check_phases(phases)?;
    let (da, db) = (rho_ab.mode_dims[0], rho_ab.mode_dims[1]);
    let table = HalfLineTable::new(da - 1);
    let members = phases
        .iter()
        .map(|&theta| {
            let plus = noisy_halfline_povm(&table, theta, Sign::Plus, phase_noise_sigma)?.operator;
            let minus = CMat::identity(da, da) - &plus;
            Ok([steer(rho_ab, &plus, db), steer(rho_ab, &minus, db)])
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(phases.to_vec(), members)
}

fn steer(rho: &DensityMatrix, povm: &CMat, db: usize) -> CMat {
    let da = povm.nrows();
    CMat::from_fn(db, db, |b, bp| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..da {
            for j in 0..da {
                let m = povm[(j, i)];
                if m.norm_sqr() > 0.0 {
                    acc += m * rho.entries[(i * db + b, j * db + bp)];
                }
            }
        }
        acc
    })
}

/// Closed-form assemblage of the lossless cat-basis hybrid state:
///
/// `sigma_{a|theta} = ½ (R |−><−| + (1−R) |+><+|) − a e^{−i theta} √(R(1−R)/(2π)) |−><+| + h.c.`
///
/// The cross term carries `½ √(2R(1−R)/π)`; its phase `−e^{−i theta}` follows the
/// quadrature convention of [`crate::homodyne`].
pub fn ideal_assemblage(r: f64, alpha: Complex64, phases: &[f64], cutoff: impl Into<Cutoff>) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid("R", "must lie in [0, 1]"));
    }
    check_phases(phases)?;
    let cutoff = cutoff.into();
    let minus = cat_state(alpha, Parity::Odd, cutoff)?.amplitudes;
    let plus = cat_state(alpha, Parity::Even, cutoff)?.amplitudes;
    let mm = &minus * minus.adjoint();
    let pp = &plus * plus.adjoint();
    let mp = &minus * plus.adjoint();
    let diag = (mm * c(r, 0.0) + pp * c(1.0 - r, 0.0)) * c(0.5, 0.0);
    let cross = (r * (1.0 - r) / (2.0 * std::f64::consts::PI)).sqrt();
    let members = phases
        .iter()
        .map(|&theta| {
            let mk = |a: f64| {
                let coeff = cis(-theta) * (-a * cross);
                let off = &mp * coeff;
                &diag + &off + off.adjoint()
            };
            [mk(1.0), mk(-1.0)]
        })
        .collect();
    Assemblage::new(phases.to_vec(), members)
}

/// Pairwise fidelities between the normalized unconditioned states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSignalingReport {
    pub fidelities: Vec<Vec<f64>>,
    /// Mean over distinct pairs.
    pub mean: f64,
    pub min: f64,
}

pub fn nonsignaling_report(assemblage: &Assemblage) -> Result<NonSignalingReport> {
    let m = assemblage.m_a();
    if m < 2 {
        return Err(Error::invalid("assemblage", "non-signaling report needs at least two settings"));
    }
    let states = (0..m)
        .map(|j| DensityMatrix::single_mode(assemblage.unconditioned(j)).normalized())
        .collect::<Result<Vec<_>>>()?;
    let mut fidelities = vec![vec![1.0; m]; m];
    let (mut sum, mut count, mut min) = (0.0, 0usize, 1.0f64);
    for i in 0..m {
        for j in (i + 1)..m {
            let f = fidelity(&states[i], &states[j])?;
            fidelities[i][j] = f;
            fidelities[j][i] = f;
            sum += f;
            count += 1;
            min = min.min(f);
        }
    }
    Ok(NonSignalingReport {
        fidelities,
        mean: sum / count as f64,
        min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;
    use crate::photonics::{build_hybrid_state, ExperimentConfig, ModelTier};

    fn phases(m: usize) -> Vec<f64> {
        (0..m).map(|n| n as f64 * std::f64::consts::PI / m as f64).collect()
    }

    fn ideal_config(r: f64) -> ExperimentConfig {
        ExperimentConfig {
            model_tier: ModelTier::IdealCat,
            r,
            n_max_a: 1,
            n_max_b: 14,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn product_states_give_proportional_members() {
        let rho_a = DensityMatrix::from_pure(&coherent_state(c(0.3, 0.4), 6).unwrap()).resized(4);
        let rho_a = rho_a.normalized().unwrap();
        let rho_b = DensityMatrix::from_pure(&coherent_state(c(0.9, 0.0), 12).unwrap());
        let asm = compute_assemblage(&rho_a.tensor(&rho_b), &phases(3), 0.05).unwrap();
        for (j, sign, m) in asm.iter() {
            let p = asm.probability(j, sign);
            assert!(linalg::max_abs_diff(m, &(&rho_b.entries * c(p, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn hybrid_state_outcomes_are_equally_likely() {
        let rho = build_hybrid_state(&ideal_config(0.36)).unwrap();
        let asm = compute_assemblage(&rho, &phases(6), 0.0).unwrap();
        for j in 0..6 {
            assert!((asm.probability(j, Sign::Plus) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_agrees_with_povm_construction() {
        for r in [0.0, 0.25, 0.5] {
            let cfg = ideal_config(r);
            let rho = build_hybrid_state(&cfg).unwrap();
            let engine = compute_assemblage(&rho, &phases(6), 0.0).unwrap();
            let oracle = ideal_assemblage(r, cfg.alpha(), &phases(6), cfg.n_max_b).unwrap();
            assert!(engine.max_abs_diff(&oracle) < 1e-8);
        }
    }

    #[test]
    fn zero_r_members_are_half_the_odd_cat() {
        let asm = ideal_assemblage(0.0, c(1.0, 0.0), &phases(4), 12).unwrap();
        // at R = 0 only the |CSS+> term survives in the diagonal part
        let plus = cat_state(c(1.0, 0.0), Parity::Even, 12).unwrap().amplitudes;
        let expect = &plus * plus.adjoint() * c(0.5, 0.0);
        for (_, _, m) in asm.iter() {
            assert!(linalg::max_abs_diff(m, &expect) < 1e-14);
        }
    }

    #[test]
    fn sign_difference_has_no_diagonal_in_cat_basis() {
        let asm = ideal_assemblage(0.36, c(1.0, 0.0), &phases(6), 12).unwrap();
        let minus = cat_state(c(1.0, 0.0), Parity::Odd, 12).unwrap().amplitudes;
        let plus = cat_state(c(1.0, 0.0), Parity::Even, 12).unwrap().amplitudes;
        for j in 0..6 {
            let diff = asm.member(j, Sign::Plus) - asm.member(j, Sign::Minus);
            for v in [&minus, &plus] {
                let e = (v.adjoint() * &diff * v)[(0, 0)];
                assert!(e.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn engine_assemblage_is_nonsignaling() {
        let cfg = ExperimentConfig::default();
        let rho = crate::photonics::shared_state(&cfg).unwrap();
        let asm = compute_assemblage(&rho, &cfg.alice_phases(), cfg.phase_noise_sigma()).unwrap();
        let rep = nonsignaling_report(&asm).unwrap();
        assert!(rep.min >= 1.0 - 1e-8);
        assert!(asm.signaling_residual() < 1e-8);
        let mut broken = asm.clone();
        broken.members[2][0] = CMat::zeros(asm.dim(), asm.dim());
        broken.members[2][0][(0, 0)] = c(asm.probability(2, Sign::Plus), 0.0);
        let rep = nonsignaling_report(&broken).unwrap();
        assert!(rep.mean < 0.99, "{}", rep.mean);
    }

    #[test]
    fn duplicate_settings_are_rejected() {
        let rho = build_hybrid_state(&ideal_config(0.36)).unwrap();
        let err = compute_assemblage(&rho, &[0.2, 0.2 + std::f64::consts::PI], 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }
}
