//! Randomized property suites shared by `properties` and `acceptance`.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use steering_core::assemblage::{compute_assemblage, Assemblage};
use steering_core::fock::{loss_channel, DensityMatrix};
use steering_core::homodyne::{halfline_povm_from, noisy_halfline_povm, sample_quadrature, HalfLineTable, Sign};
use steering_core::linalg::{c, cis, max_abs_diff, min_eigenvalue, trace, CMat};
use steering_core::pipeline::simulate_records;
use steering_core::sdp::{solve, BlockSdp, SdpStatus, SolverOptions, Term};
use steering_core::steering::{enumerate_strategies, evaluate_functional, optimal_functional};
use steering_core::tomography::{bin_records, mh_sample_with_povm, ChainOptions, PovmSet};
use steering_core::ExperimentConfig;

/// `(A A† + 10⁻³)/Tr` from `2 d²` real entries; always full rank.
pub fn ginibre(d: usize, v: &[f64]) -> CMat {
    let a = CMat::from_fn(d, d, |i, k| c(v[2 * (i * d + k)], v[2 * (i * d + k) + 1]));
    let rho = &a * a.adjoint() + CMat::identity(d, d) * c(1e-3, 0.0);
    let t = trace(&rho).re;
    rho / c(t, 0.0)
}

fn density(d_lo: usize, d_hi: usize) -> impl Strategy<Value = CMat> {
    (d_lo..=d_hi).prop_flat_map(|d| {
        prop::collection::vec(-1.0..1.0f64, 2 * d * d).prop_map(move |v| ginibre(d, &v))
    })
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// `M_+ + M_- = 1`, `M_± ⪰ 0`, and `M_{θ+φ} = D(φ)† M_θ D(φ)` with and without phase noise.
pub fn povm_suite(cases: u32) -> Result<(), String> {
    let s = (1usize..=10, -4.0..4.0f64, -3.0..3.0f64, 0.0..0.15f64);
    run(cases, s, |(n_max, theta, phi, sigma)| {
        let table = HalfLineTable::new(n_max);
        let d = n_max + 1;
        let rot = CMat::from_fn(d, d, |m, n| if m == n { cis(phi * n as f64) } else { c(0.0, 0.0) });
        for noise in [0.0, sigma] {
            let plus = noisy_halfline_povm(&table, theta, Sign::Plus, noise).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let minus = noisy_halfline_povm(&table, theta, Sign::Minus, noise).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let sum = &plus.operator + &minus.operator;
            check(max_abs_diff(&sum, &CMat::identity(d, d)) < 1e-10, || "completeness".into())?;
            for m in [&plus.operator, &minus.operator] {
                let lmin = min_eigenvalue(m);
                check(lmin > -1e-10, || format!("negative eigenvalue {lmin}"))?;
            }
            let shifted = noisy_halfline_povm(&table, theta + phi, Sign::Plus, noise).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let conj = rot.adjoint() * &plus.operator * &rot;
            let err = max_abs_diff(&shifted.operator, &conj);
            check(err < 1e-10, || format!("covariance error {err:e}"))?;
        }
        let flip = halfline_povm_from(&table, theta + std::f64::consts::PI, Sign::Plus);
        let minus = halfline_povm_from(&table, theta, Sign::Minus);
        check(max_abs_diff(&flip.operator, &minus.operator) < 1e-10, || "θ+π swaps signs".into())
    })
}

/// Loss keeps states positive and normalized and composes as `E_a ∘ E_b = E_{ab}`.
pub fn channel_suite(cases: u32) -> Result<(), String> {
    let s = (density(2, 9), 0.0..=1.0f64, 0.0..=1.0f64);
    run(cases, s, |(m, e1, e2)| {
        let rho = DensityMatrix::single_mode(m);
        let fail = |e: steering_core::Error| TestCaseError::fail(e.to_string());
        let once = loss_channel(&rho, e1, 0).map_err(fail)?;
        let twice = loss_channel(&once, e2, 0).map_err(fail)?;
        let direct = loss_channel(&rho, e1 * e2, 0).map_err(fail)?;
        let err = max_abs_diff(&twice.entries, &direct.entries);
        check(err < 1e-12, || format!("semigroup error {err:e}"))?;
        let lmin = min_eigenvalue(&once.entries);
        check(lmin > -1e-12, || format!("negative eigenvalue {lmin:e}"))?;
        check((once.trace() - 1.0).abs() < 1e-12, || format!("trace {}", once.trace()))
    })
}

fn lhs_assemblage(m_a: usize, d: usize, weights: &[f64], states: &[CMat]) -> Assemblage {
    let table = enumerate_strategies(m_a).unwrap();
    let total: f64 = weights.iter().sum();
    let members = (0..m_a)
        .map(|j| {
            let mut pair = [CMat::zeros(d, d), CMat::zeros(d, d)];
            for lambda in 0..table.len() {
                let s = table.sign(lambda, j);
                pair[s.index()] += &states[lambda] * c(weights[lambda] / total, 0.0);
            }
            pair
        })
        .collect();
    let phases = (0..m_a).map(|j| j as f64 * std::f64::consts::PI / m_a as f64).collect();
    Assemblage::new(phases, members).unwrap()
}

/// A random SDP with known strictly feasible primal `x0` and dual `(y0, s0)`.
fn random_sdp(dims: &[usize], seed: u64, m: usize) -> (BlockSdp, Vec<CMat>, Vec<f64>, Vec<CMat>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut next = || rng.random_range(-1.0..1.0);
    let psd = |d: usize, next: &mut dyn FnMut() -> f64| {
        let v: Vec<f64> = (0..2 * d * d).map(|_| next()).collect();
        ginibre(d, &v) + CMat::identity(d, d) * c(0.05, 0.0)
    };
    let x0: Vec<CMat> = dims.iter().map(|&d| psd(d, &mut next)).collect();
    let s0: Vec<CMat> = dims.iter().map(|&d| psd(d, &mut next)).collect();
    let a: Vec<Vec<Term>> = (0..m)
        .map(|_| {
            dims.iter()
                .enumerate()
                .flat_map(|(blk, &d)| (0..d * d).map(move |p| (blk, p)).collect::<Vec<_>>())
                .map(|(block, basis)| Term { block, basis, coef: next() })
                .collect()
        })
        .collect();
    let y0: Vec<f64> = (0..m).map(|_| next()).collect();
    let mut p = BlockSdp {
        block_dims: dims.to_vec(),
        c: s0.clone(),
        a,
        b: vec![0.0; m],
    };
    p.b = p.apply(&x0);
    let aty = p.adjoint(&y0);
    p.c = s0.iter().zip(&aty).map(|(s, a)| s + a).collect();
    (p, x0, y0, s0)
}

/// Weak duality on random strictly feasible SDPs, and re-validation of optimal
/// steering functionals against random LHS assemblages.
pub fn sdp_suite(cases: u32) -> Result<(), String> {
    let s = (
        prop::collection::vec(1usize..=3, 1..=3),
        1usize..=4,
        any::<u64>(),
        density(6, 6),
        2usize..=4,
        prop::collection::vec(0.01..1.0f64, 16),
        prop::collection::vec(density(3, 3), 16),
    );
    run(cases, s, |(dims, m, seed, rho, m_a, weights, states)| {
        let fail = |e: steering_core::Error| TestCaseError::fail(e.to_string());
        // independent constraints need m ≤ number of real variables
        let m = m.min(dims.iter().map(|d| d * d).sum());
        let (p, x0, y0, _) = random_sdp(&dims, seed, m);
        let sol = solve(&p, &SolverOptions::default()).map_err(fail)?;
        check(sol.status == SdpStatus::Optimal, || format!("status {:?} for dims {dims:?}, m {m}, seed {seed}", sol.status))?;
        let scale = 1.0 + sol.primal_objective.abs();
        check(sol.dual_objective <= sol.primal_objective + 1e-7 * scale, || "gap sign".into())?;
        let feasible_primal = p.primal_objective(&x0);
        let feasible_dual: f64 = p.b.iter().zip(&y0).map(|(b, y)| b * y).sum();
        check(sol.dual_objective <= feasible_primal + 1e-7 * scale, || "dual above a feasible primal".into())?;
        check(sol.primal_objective >= feasible_dual - 1e-7 * scale, || "primal below a feasible dual".into())?;

        let rho_ab = DensityMatrix::new(rho, vec![2, 3]).map_err(fail)?;
        let phases: Vec<f64> = (0..m_a).map(|j| 0.3 + j as f64 * std::f64::consts::PI / m_a as f64).collect();
        let asm = compute_assemblage(&rho_ab, &phases, 0.0).map_err(fail)?;
        let res = optimal_functional(&asm).map_err(fail)?;
        let f = res.functional().unwrap();
        f.verify(1e-9).map_err(fail)?;
        check(res.objective <= 1e-7, || format!("S_min {:e} above zero, status {:?}, gap {:e}", res.objective, res.status, res.duality_gap))?;
        let s_again = evaluate_functional(f, &asm).map_err(fail)?;
        check((s_again - res.objective).abs() < 1e-9, || "re-evaluated S differs".into())?;
        let n = 1 << m_a;
        let lhs = lhs_assemblage(m_a, 3, &weights[..n], &states[..n]);
        let s_lhs = evaluate_functional(f, &lhs).map_err(fail)?;
        check(s_lhs >= -1e-9, || format!("certificate violated by an LHS assemblage: {s_lhs:e}"))
    })
}

/// Identical seeds give identical records, samples and chains; different seeds differ.
pub fn determinism_suite(cases: u32) -> Result<(), String> {
    let s = (any::<u64>(), 1usize..=3, 1usize..=2);
    run(cases, s, |(seed, m_a, n_bob)| {
        let fail = |e: steering_core::Error| TestCaseError::fail(e.to_string());
        let config = ExperimentConfig {
            seed,
            m_a,
            samples_per_phase: 40,
            n_max_b: 16,
            tail_tolerance: 1e-6,
            bob_phases_deg: (0..n_bob).map(|k| 90.0 * k as f64).collect(),
            ..ExperimentConfig::default()
        };
        let a = simulate_records(&config).map_err(fail)?;
        let b = simulate_records(&config).map_err(fail)?;
        check(a == b, || "records differ".into())?;
        let other = simulate_records(&ExperimentConfig { seed: seed ^ 1, ..config.clone() }).map_err(fail)?;
        check(a != other, || "seed has no effect".into())?;

        let vac = DensityMatrix::fock(0, 4);
        let q1 = sample_quadrature(&vac, 0.4, seed, 20).map_err(fail)?;
        check(q1 == sample_quadrature(&vac, 0.4, seed, 20).map_err(fail)?, || "samples differ".into())?;

        let data = bin_records(&a, (-4.0, 4.0), 8).map_err(fail)?;
        let povm = PovmSet::new(2, 0.85, &data.bins, &data.bob_phases).map_err(fail)?;
        let opts = ChainOptions {
            n_retained: 10,
            burn_in: 20,
            thin: 1,
            step_size: 0.05,
            seed,
        };
        let start = DensityMatrix::single_mode(CMat::identity(3, 3) / c(3.0, 0.0));
        let counts = &data.conditions[0];
        let c1 = mh_sample_with_povm(counts, &povm, &start, &opts).map_err(fail)?;
        let c2 = mh_sample_with_povm(counts, &povm, &start, &opts).map_err(fail)?;
        let same = c1.len() == 10 && (0..c1.len()).all(|i| c1.sample_coords(i) == c2.sample_coords(i));
        check(same, || "chains differ".into())
    })
}
