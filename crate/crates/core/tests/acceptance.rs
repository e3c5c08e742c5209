//! One PASS/FAIL line per acceptance criterion. Runs without the libtest harness so
//! the lines are always printed; exits non-zero if any criterion fails.

mod props;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use steering_core::assemblage::{compute_assemblage, ideal_assemblage, nonsignaling_report};
use steering_core::fock::{fidelity, negativity, DensityMatrix};
use steering_core::photonics::shared_state;
use steering_core::pipeline::{analyze, simulate_product_control, simulate_records};
use steering_core::steering::{
    monotonicity_violations, optimize_ratio, solve_config, sweep, SdpSettings, SweepAxis, SweepOptions, VIOLATION_TOL,
};
use steering_core::tomography::{reconstruct_assemblage, QuadratureRecord};
use steering_core::{ExperimentConfig, ModelTier};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn nominal() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn lossless_ideal(r: f64) -> ExperimentConfig {
    ExperimentConfig {
        model_tier: ModelTier::IdealCat,
        r,
        eta_a: 1.0,
        eta_b_channel: 1.0,
        phase_noise_deg: 0.0,
        n_max_a: 1,
        ..nominal()
    }
}

fn s_min(cfg: &ExperimentConfig) -> f64 {
    solve_config(cfg, &SdpSettings::default()).unwrap().objective
}

fn c1() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.25, 0.36, 0.5] {
        let cfg = lossless_ideal(r);
        let rho = shared_state(&cfg).unwrap();
        let phases = cfg.alice_phases();
        let asm = compute_assemblage(&rho, &phases, 0.0).unwrap();
        let oracle = ideal_assemblage(r, cfg.alpha(), &phases, cfg.n_max_b).unwrap();
        worst = worst.max(asm.max_abs_diff(&oracle));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(worst < 1e-8 && secs < 5.0, format!("max entry error {worst:.2e} (< 1e-8), {secs:.2} s (< 5 s)"))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let values: Vec<f64> = (1..=6).map(f64::from).collect();
    let rows = sweep(&nominal(), SweepAxis::MA, &values, &SweepOptions::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let zero = rows[..2].iter().all(|r| r.s_min >= -VIOLATION_TOL);
    let violated = rows[2..].iter().all(|r| r.s_min < -VIOLATION_TOL);
    let monotone = monotonicity_violations(&rows, 1e-9).is_empty();
    let list: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.s_min)).collect();
    outcome(
        zero && violated && monotone && secs < 300.0,
        format!("S_min(m_A=1..6) = [{}], {secs:.1} s", list.join(", ")),
    )
}

fn c3() -> Outcome {
    let cfg = nominal();
    let grid: Vec<f64> = (20..=60).map(|k| k as f64 / 100.0).collect();
    let opts = SweepOptions {
        optimize_r: false,
        ..SweepOptions::default()
    };
    let rows = sweep(&cfg, SweepAxis::R, &grid, &opts).unwrap();
    let best = rows.iter().min_by(|a, b| a.s_min.total_cmp(&b.s_min)).unwrap();
    let (r, res) = optimize_ratio(&cfg, best.axis_value - 0.01, best.axis_value + 0.01, 1e-4, &SdpSettings::default()).unwrap();
    outcome(
        (r - 0.37).abs() <= 0.05,
        format!("argmin R = {r:.4} (S_min {:.4e}); target 0.37 ± 0.05", res.objective),
    )
}

fn c4() -> Outcome {
    let at = |eta: f64| {
        s_min(&ExperimentConfig {
            r: 0.37,
            eta_a: eta,
            eta_b_channel: 0.90,
            ..nominal()
        })
    };
    let (mut lo, mut hi) = (0.55, 0.80);
    if at(lo) < -VIOLATION_TOL || at(hi) >= -VIOLATION_TOL {
        return outcome(false, "no sign change of S_min on [0.55, 0.80]".into());
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < -VIOLATION_TOL {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    outcome((x - 0.65).abs() <= 0.03, format!("eta_A crossing = {x:.4}; target 0.65 ± 0.03"))
}

fn c5() -> Outcome {
    let s = s_min(&nominal());
    outcome(s < -VIOLATION_TOL, format!("S_min = {s:.4e} (< 0)"))
}

fn c6(records: &[QuadratureRecord]) -> Outcome {
    let cfg = nominal();
    let rec = reconstruct_assemblage(records, &cfg).unwrap();
    let ns = nonsignaling_report(&rec.assemblage).unwrap();
    let mut worst_z: f64 = 0.0;
    for j in 0..cfg.m_a {
        let n = (rec.conditions[2 * j].total + rec.conditions[2 * j + 1].total) as f64;
        let se = (0.25 / n).sqrt();
        for cond in &rec.conditions[2 * j..2 * j + 2] {
            let tr = rec.assemblage.probability(j, cond.alice_sign);
            worst_z = worst_z.max((tr - 0.5).abs() / se);
        }
    }
    outcome(
        ns.mean >= 0.995 && worst_z <= 4.0,
        format!("mean pairwise fidelity {:.5} (≥ 0.995), max |Tr σ − 1/2| = {worst_z:.2} SE (≤ 4)", ns.mean),
    )
}

fn c7(records: &[QuadratureRecord]) -> Outcome {
    let cfg = nominal();
    let rec = reconstruct_assemblage(records, &cfg).unwrap();
    let truth = compute_assemblage(&shared_state(&cfg).unwrap(), &cfg.alice_phases(), cfg.phase_noise_sigma()).unwrap();
    let d = cfg.tomography.n_max + 1;
    let mut min_f: f64 = 1.0;
    let mut monotone = true;
    for cond in &rec.conditions {
        let j = cond.alice_phase_index;
        let known = DensityMatrix::single_mode(truth.member(j, cond.alice_sign).clone())
            .resized(d)
            .normalized()
            .unwrap();
        min_f = min_f.min(fidelity(&known, &cond.maxlik.rho).unwrap());
        monotone &= cond.maxlik.history.windows(2).all(|w| w[1] >= w[0] - 1e-15);
    }
    let events = rec.conditions.iter().map(|c| c.total).min().unwrap();
    outcome(
        min_f >= 0.99 && monotone,
        format!("min fidelity {min_f:.5} over 12 conditions (≥ 0.99, eta 0.85, ≥ {events} events each), log-likelihood monotone: {monotone}"),
    )
}

fn c8(records: &[QuadratureRecord]) -> Outcome {
    let cfg = nominal();
    let t = Instant::now();
    let a = analyze(records, &cfg).unwrap();
    let null_records = simulate_product_control(&cfg).unwrap();
    let null = analyze(&null_records, &cfg).unwrap();
    let n_states = a.chains.iter().map(|c| c.len()).min().unwrap();
    let h = &a.histogram;
    let ok = h.separation_sigmas >= 3.0
        && null.histogram.separation_sigmas < 2.0
        && h.s_values.len() >= 100_000
        && n_states >= 10_000;
    outcome(
        ok,
        format!(
            "steered: mean {:.4e}, std {:.3e}, separation {:.2} sigma (≥ 3) from {} values, {} states/condition; null: mean {:.4e}, separation {:.2} sigma (< 2); {:.0} s",
            h.mean,
            h.std,
            h.separation_sigmas,
            h.s_values.len(),
            n_states,
            null.histogram.mean,
            null.histogram.separation_sigmas,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c9() -> Outcome {
    let ideal = negativity(&shared_state(&lossless_ideal(0.5)).unwrap()).unwrap();
    let sq = negativity(&shared_state(&nominal()).unwrap()).unwrap();
    outcome(
        (ideal - 0.5).abs() <= 1e-8 && (0.23..=0.33).contains(&sq),
        format!("ideal R=0.5: {ideal:.10} (0.5 ± 1e-8); squeezed nominal settings: {sq:.4} (in [0.23, 0.33])"),
    )
}

fn c10() -> Outcome {
    const CASES: u32 = 100;
    let suites: [(&str, fn(u32) -> Result<(), String>); 4] = [
        ("povm", props::povm_suite),
        ("channel", props::channel_suite),
        ("sdp", props::sdp_suite),
        ("determinism", props::determinism_suite),
    ];
    let mut failed = vec![];
    for (name, suite) in suites {
        if let Err(e) = suite(CASES) {
            failed.push(format!("{name}: {}", e.lines().next().unwrap_or("")));
        }
    }
    let detail = if failed.is_empty() {
        format!("povm, channel, sdp, determinism suites pass on {CASES} instances each")
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty(), detail)
}

fn main() {
    // `cargo test -- --list` and filters passed by the harness are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let records = simulate_records(&nominal()).unwrap();
    let mut criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "oracle equivalence", Box::new(c1)),
        (2, "violation needs at least three settings", Box::new(c2)),
        (3, "optimal heralding ratio", Box::new(c3)),
        (4, "Alice transmission threshold", Box::new(c4)),
        (5, "violation sign at nominal settings", Box::new(c5)),
        (6, "non-signaling of reconstructed assemblage", Box::new(|| c6(&records))),
        (7, "tomography closed loop", Box::new(|| c7(&records))),
        (8, "error-bar pipeline and null control", Box::new(|| c8(&records))),
        (9, "negativity", Box::new(c9)),
        (10, "property suites", Box::new(c10)),
    ];
    let mut failures = 0;
    for (n, name, f) in criteria.drain(..) {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!o.pass);
        println!(
            "{} [{n}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 criteria pass", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
