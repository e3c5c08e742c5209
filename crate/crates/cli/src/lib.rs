//! Command implementations behind the `steering` binary. Each command writes its
//! artifacts plus a `manifest.json` into an output directory and also returns the
//! computed values, so it can be driven from tests without touching the process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use steering_core::assemblage::{compute_assemblage, nonsignaling_report, Assemblage, NonSignalingReport};
use steering_core::fock::{fidelity, negativity, partial_trace, wigner_grid, DensityMatrix, WignerPoint};
use steering_core::homodyne::Sign;
use steering_core::io::{self, AssemblageJson, HistogramSummary, SdpResultJson, SweepCsvRow};
use steering_core::linalg::c;
use steering_core::photonics::{apply_losses, build_hybrid_state, cv_basis, shared_state, ExperimentConfig, ModelTier};
use steering_core::pipeline::{analyze, simulate_product_control, simulate_records, Analysis};
use steering_core::sdp::SdpStatus;
use steering_core::steering::{
    evaluate_functional, lhs_membership, optimal_functional, SdpResult, SweepAxis, SweepOptions, SweepRow,
};
use steering_core::tomography::QuadratureRecord;
use steering_core::{fock, steering, Error};

/// Tolerance used when re-validating a returned functional.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Wigner grids span `[-WIGNER_EXTENT, WIGNER_EXTENT]²` with spacing `WIGNER_STEP`.
pub const WIGNER_EXTENT: f64 = 5.0;
pub const WIGNER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(stage: &'static str, kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }

    /// Tags a core error with the stage it came from.
    pub fn from_core(stage: &'static str, e: Error) -> Self {
        let kind = match &e {
            Error::InvalidParameter { .. }
            | Error::CutoffTooSmall { .. }
            | Error::DegenerateCat(_)
            | Error::TooManyStrategies(_) => ErrorKind::Config,
            Error::Io(_) | Error::Parse(_) | Error::EmptyCondition { .. } => ErrorKind::Io,
            _ => ErrorKind::Numerical,
        };
        CliError::new(stage, kind, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for steering_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}

/// Every config key with its default, for `--help` and the `defaults` command.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("alpha", "cat amplitude {re, im}; default {1, 0}"),
    ("squeezing_db", "squeezing of the squeezed tier in dB; default 3"),
    ("R", "heralding ratio, weight of |0>|CSS->; default 0.36"),
    ("eta_A", "Alice's total transmission; default 0.75"),
    ("eta_B_channel", "Bob's transmission before detection; default 0.90"),
    ("eta_B_det", "Bob's homodyne efficiency, corrected by tomography; default 0.85"),
    ("n_max_A", "Alice's Fock cutoff; default 3"),
    ("n_max_B", "Bob's Fock cutoff; default 18"),
    ("m_A", "number of Alice's settings theta_n = n pi/m_A; default 6"),
    ("phase_noise_deg", "Gaussian phase jitter of Alice's homodyne, degrees; default 3"),
    ("samples_per_phase", "simulated events per Alice setting; default 120000"),
    ("seed", "master seed, split per stage; default 1"),
    ("model_tier", "\"squeezed-approx\" or \"ideal-cat\"; default squeezed-approx"),
    ("tail_tolerance", "largest Fock tail weight allowed by truncation; default 1e-8"),
    ("bob_phases_deg", "Bob's local-oscillator phases, degrees; default [0,30,...,150]"),
    ("sdp_trace_capture", "trace allowed outside Bob's reduced SDP space; default 1e-6"),
    ("tomography.n_max", "reconstruction cutoff; default 10"),
    ("tomography.q_min", "lower bin edge; default -6"),
    ("tomography.q_max", "upper bin edge; default 6"),
    ("tomography.n_bins", "quadrature bins; default 100"),
    ("tomography.max_iter", "MaxLik iterations; default 2000"),
    ("tomography.tol", "MaxLik per-event log-likelihood tolerance; default 1e-9"),
    ("chain.n_retained", "retained Metropolis-Hastings states per condition; default 10000"),
    ("chain.burn_in", "burn-in steps; default 2000"),
    ("chain.thin", "steps between retained states; default 4"),
    ("chain.step_size", "initial random-walk step; default 0.02"),
    ("chain.n_s_values", "S evaluations in the histogram; default 100000"),
];

pub fn config_help() -> String {
    let mut s = String::from("Config keys (JSON; angles in degrees; missing keys take defaults):\n");
    for (k, d) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<20} {d}\n"));
    }
    s
}

/// A parsed config together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: Option<PathBuf>,
    pub snapshot: String,
    pub overrides: Vec<String>,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let (snapshot, source) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::new("config", ErrorKind::Io, format!("{}: {e}", p.display())))?,
                Some(p.to_path_buf()),
            ),
            None => (
                serde_json::to_string_pretty(&ExperimentConfig::default()).expect("default config serializes") + "\n",
                None,
            ),
        };
        let config = io::parse_config(&snapshot, overrides).map_err(|e| match e {
            Error::Parse(m) => CliError::new("config", ErrorKind::Config, m),
            other => CliError::from_core("config", other),
        })?;
        Ok(LoadedConfig {
            config,
            source,
            snapshot,
            overrides: overrides.to_vec(),
        })
    }

    pub fn from_config(config: ExperimentConfig) -> Self {
        let snapshot = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
        LoadedConfig {
            config,
            source: None,
            snapshot,
            overrides: vec![],
        }
    }
}

/// How a manifest entry is parsed back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    Config,
    ModelReport,
    Assemblage,
    NonsignalingReport,
    SdpResult,
    SweepCsv,
    RecordsCsv,
    WignerCsv,
    HistogramCsv,
    HistogramSummary,
    ChainSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the manifest.
    pub path: String,
    pub schema: Schema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    pub config_source: Option<String>,
    pub overrides: Vec<String>,
    /// Byte copy of the input config.
    pub config_snapshot: String,
    pub effective_config: ExperimentConfig,
    pub outputs: BTreeMap<String, OutputEntry>,
    pub timings_s: BTreeMap<String, f64>,
}

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_SNAPSHOT: &str = "config.json";

struct Run {
    out: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    fn start(command: &str, cfg: &LoadedConfig, out: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(out).map_err(|e| io_err("output", out, e))?;
        let mut versions = BTreeMap::new();
        versions.insert("steering-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("manifest-format".into(), "1".into());
        let mut run = Run {
            out: out.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                versions,
                seed: cfg.config.seed,
                config_source: cfg.source.as_ref().map(|p| p.display().to_string()),
                overrides: cfg.overrides.clone(),
                config_snapshot: CONFIG_SNAPSHOT.into(),
                effective_config: cfg.config.clone(),
                outputs: BTreeMap::new(),
                timings_s: BTreeMap::new(),
            },
            clock: Instant::now(),
        };
        let path = run.path(CONFIG_SNAPSHOT);
        std::fs::write(&path, &cfg.snapshot).map_err(|e| io_err("output", &path, e))?;
        run.record("config", CONFIG_SNAPSHOT, Schema::Config);
        Ok(run)
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn record(&mut self, name: &str, rel: &str, schema: Schema) {
        self.manifest.outputs.insert(
            name.into(),
            OutputEntry {
                path: rel.into(),
                schema,
            },
        );
    }

    fn json<T: Serialize>(&mut self, name: &str, rel: &str, schema: Schema, v: &T) -> CliResult<()> {
        io::write_json(&self.path(rel), v).stage("output")?;
        self.record(name, rel, schema);
        Ok(())
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.manifest.timings_s.insert(stage.into(), (now - self.clock).as_secs_f64());
        self.clock = now;
    }

    fn finish(self) -> CliResult<RunManifest> {
        io::write_json(&self.path(MANIFEST), &self.manifest).stage("output")?;
        Ok(self.manifest)
    }
}

fn io_err(stage: &'static str, p: &Path, e: std::io::Error) -> CliError {
    CliError::new(stage, ErrorKind::Io, format!("{}: {e}", p.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub tier: ModelTier,
    /// Before any loss.
    pub negativity_pure: f64,
    /// With `eta_A` and `eta_B_channel`; Bob's detection efficiency excluded.
    pub negativity: f64,
    /// Additionally with `eta_B_det`.
    pub negativity_detected: f64,
    /// Population of Alice's `n ≥ 2` levels after loss.
    pub alice_higher_photon_weight: f64,
    /// Truncated weight of Bob's basis states `[CSS−, CSS+]`.
    pub bob_tail_weights: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub tiers: Vec<TierReport>,
    /// Fidelity of the two tiers' pure two-mode states.
    pub tier_fidelity: f64,
    /// Overlaps `|<cat|approx>|²` for `[CSS−, CSS+]`.
    pub basis_fidelities: [f64; 2],
}

fn tier_report(config: &ExperimentConfig) -> steering_core::Result<TierReport> {
    let (minus, plus) = cv_basis(config)?;
    let pure = build_hybrid_state(config)?;
    let lossy = apply_losses(&pure, config)?;
    let detected = fock::loss_channel(&lossy, config.eta_b_det, 1)?;
    let alice = partial_trace(&lossy, 0)?;
    Ok(TierReport {
        tier: config.model_tier,
        negativity_pure: negativity(&pure)?,
        negativity: negativity(&lossy)?,
        negativity_detected: negativity(&detected)?,
        alice_higher_photon_weight: alice.populations().iter().skip(2).sum(),
        bob_tail_weights: [minus.tail_weight, plus.tail_weight],
    })
}

pub fn model_report(config: &ExperimentConfig) -> CliResult<ModelReport> {
    config.validate().stage("config")?;
    let with_tier = |tier| ExperimentConfig {
        model_tier: tier,
        ..config.clone()
    };
    let (ideal, approx) = (with_tier(ModelTier::IdealCat), with_tier(ModelTier::SqueezedApprox));
    let tiers = vec![tier_report(&ideal).stage("model")?, tier_report(&approx).stage("model")?];
    let tier_fidelity = fidelity(
        &build_hybrid_state(&ideal).stage("model")?,
        &build_hybrid_state(&approx).stage("model")?,
    )
    .stage("model")?;
    let (im, ip) = cv_basis(&ideal).stage("model")?;
    let (am, ap) = cv_basis(&approx).stage("model")?;
    Ok(ModelReport {
        tiers,
        tier_fidelity,
        basis_fidelities: [im.inner(&am).norm_sqr(), ip.inner(&ap).norm_sqr()],
    })
}

pub fn cmd_model(cfg: &LoadedConfig, out: &Path) -> CliResult<(ModelReport, RunManifest)> {
    let mut run = Run::start("model", cfg, out)?;
    let report = model_report(&cfg.config)?;
    run.lap("model");
    run.json("model_report", "model_report.json", Schema::ModelReport, &report)?;
    Ok((report, run.finish()?))
}

/// The configured shared state's assemblage over Alice's settings.
pub fn model_assemblage(config: &ExperimentConfig) -> CliResult<Assemblage> {
    config.validate().stage("config")?;
    let rho = shared_state(config).stage("model")?;
    compute_assemblage(&rho, &config.alice_phases(), config.phase_noise_sigma()).stage("assemblage")
}

pub fn cmd_assemblage(cfg: &LoadedConfig, out: &Path) -> CliResult<(Assemblage, RunManifest)> {
    let mut run = Run::start("assemblage", cfg, out)?;
    let asm = model_assemblage(&cfg.config)?;
    let ns = nonsignaling_report(&asm).stage("assemblage")?;
    run.lap("assemblage");
    run.json("assemblage", "assemblage.json", Schema::Assemblage, &AssemblageJson::from(&asm))?;
    run.json("nonsignaling", "nonsignaling.json", Schema::NonsignalingReport, &ns)?;
    Ok((asm, run.finish()?))
}

/// Recomputes the certificate's defining properties independently of the solver.
pub fn recheck(result: &SdpResult, asm: &Assemblage) -> Result<String, String> {
    if let Some(f) = result.functional() {
        f.verify(CERTIFICATE_TOL).map_err(|e| e.to_string())?;
        let s = evaluate_functional(f, asm).map_err(|e| e.to_string())?;
        if (s - result.objective).abs() > 1e-9 {
            return Err(format!("re-evaluated S = {s:e} differs from reported {:e}", result.objective));
        }
        Ok(format!("ok: functional valid within {CERTIFICATE_TOL:e}, S re-evaluated"))
    } else {
        Ok(format!("ok: decomposition shift t = {:e}", result.objective))
    }
}

pub fn read_assemblage(path: &Path) -> CliResult<Assemblage> {
    let j: AssemblageJson = io::read_json(path).stage("read-assemblage")?;
    Assemblage::try_from(&j).stage("read-assemblage")
}

/// `optimal_functional` on a stored assemblage, or `lhs_membership` with `membership`.
pub fn cmd_sdp(cfg: &LoadedConfig, assemblage: &Path, membership: bool, out: &Path) -> CliResult<(SdpResult, RunManifest)> {
    let mut run = Run::start("sdp", cfg, out)?;
    let asm = read_assemblage(assemblage)?;
    run.lap("read");
    let result = if membership {
        lhs_membership(&asm)
    } else {
        optimal_functional(&asm)
    }
    .stage("sdp")?;
    run.lap("sdp");
    let check = recheck(&result, &asm);
    let text = match &check {
        Ok(s) => s.clone(),
        Err(s) => format!("failed: {s}"),
    };
    run.json("sdp", "sdp.json", Schema::SdpResult, &SdpResultJson::new(&result, &asm.phases, text))?;
    let manifest = run.finish()?;
    if result.status != SdpStatus::Optimal {
        return Err(CliError::new(
            "sdp",
            ErrorKind::Numerical,
            format!(
                "solver status {:?} after {} iterations, gap {:e}",
                result.status, result.iterations, result.duality_gap
            ),
        ));
    }
    if let Err(s) = check {
        return Err(CliError::new("sdp", ErrorKind::Numerical, format!("certificate re-check failed: {s}")));
    }
    Ok((result, manifest))
}

pub fn cmd_sweep(cfg: &LoadedConfig, axis: SweepAxis, values: &[f64], optimize_r: bool, out: &Path) -> CliResult<(Vec<SweepRow>, RunManifest)> {
    let mut run = Run::start("sweep", cfg, out)?;
    let opts = SweepOptions {
        optimize_r,
        ..SweepOptions::default()
    };
    let rows = steering::sweep(&cfg.config, axis, values, &opts).stage("sweep")?;
    run.lap("sweep");
    io::write_sweep(&run.path("sweep.csv"), &rows).stage("output")?;
    run.record("sweep", "sweep.csv", Schema::SweepCsv);
    Ok((rows, run.finish()?))
}

pub fn cmd_simulate(cfg: &LoadedConfig, null_control: bool, out: &Path) -> CliResult<(Vec<QuadratureRecord>, RunManifest)> {
    let mut run = Run::start("simulate", cfg, out)?;
    let records = if null_control {
        simulate_product_control(&cfg.config)
    } else {
        simulate_records(&cfg.config)
    }
    .stage("simulate")?;
    run.lap("simulate");
    io::write_records(&run.path("records.csv"), &records).stage("output")?;
    run.record("records", "records.csv", Schema::RecordsCsv);
    Ok((records, run.finish()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub theta_index: usize,
    pub sign: Sign,
    pub frequency: f64,
    pub events: u64,
    pub maxlik_iterations: usize,
    pub maxlik_converged: bool,
    pub acceptance_rate: f64,
    pub step_size: f64,
    pub pathological: bool,
    pub mean_purity: f64,
}

fn wigner_axis() -> Vec<f64> {
    let n = (2.0 * WIGNER_EXTENT / WIGNER_STEP).round() as usize;
    (0..=n).map(|i| -WIGNER_EXTENT + WIGNER_STEP * i as f64).collect()
}

pub fn wigner_of(rho: &DensityMatrix) -> steering_core::Result<Vec<WignerPoint>> {
    let xs = wigner_axis();
    wigner_grid(rho, &xs, &xs)
}

/// Riemann sum over a grid written by [`wigner_of`].
pub fn wigner_integral(points: &[WignerPoint]) -> f64 {
    points.iter().map(|p| p.w).sum::<f64>() * WIGNER_STEP * WIGNER_STEP
}

/// Reconstruction, certification and error bars from a records file.
pub fn cmd_analyze(cfg: &LoadedConfig, records: &Path, out: &Path) -> CliResult<(Analysis, RunManifest)> {
    let mut run = Run::start("analyze", cfg, out)?;
    let records = io::read_records(records).stage("read-records")?;
    run.lap("read");
    let a = analyze(&records, &cfg.config).stage("analyze")?;
    run.lap("analyze");
    let asm = &a.reconstruction.assemblage;
    run.json("assemblage", "assemblage.json", Schema::Assemblage, &AssemblageJson::from(asm))?;
    run.json("nonsignaling", "nonsignaling.json", Schema::NonsignalingReport, &a.nonsignaling)?;
    let check = recheck(&a.sdp, &asm.nonsignaling_projection()).unwrap_or_else(|s| format!("failed: {s}"));
    run.json("sdp", "sdp.json", Schema::SdpResult, &SdpResultJson::new(&a.sdp, &asm.phases, check))?;
    let summaries: Vec<ChainSummary> = a
        .reconstruction
        .conditions
        .iter()
        .zip(&a.chains)
        .map(|(cond, ch)| ChainSummary {
            theta_index: cond.alice_phase_index,
            sign: cond.alice_sign,
            frequency: cond.frequency,
            events: cond.total,
            maxlik_iterations: cond.maxlik.iterations,
            maxlik_converged: cond.maxlik.converged,
            acceptance_rate: ch.acceptance_rate,
            step_size: ch.step_size,
            pathological: ch.pathological,
            mean_purity: ch.mean_purity(),
        })
        .collect();
    run.json("chains", "chains.json", Schema::ChainSummary, &summaries)?;
    for (name, h) in [("histogram", &a.histogram), ("histogram_aligned", &a.aligned)] {
        let (csv, json) = (format!("{name}.csv"), format!("{name}.json"));
        io::write_histogram(&run.path(&csv), &run.path(&json), h).stage("output")?;
        run.record(&format!("{name}_values"), &csv, Schema::HistogramCsv);
        run.record(&format!("{name}_summary"), &json, Schema::HistogramSummary);
    }
    run.lap("write");
    let mut states: Vec<(String, DensityMatrix)> = asm
        .iter()
        .map(|(j, s, m)| {
            let p = asm.probability(j, s);
            let tag = if s == Sign::Plus { "plus" } else { "minus" };
            (format!("wigner_theta{j}_{tag}"), DensityMatrix::single_mode(m / c(p, 0.0)))
        })
        .collect();
    states.push(("wigner_unconditioned".into(), DensityMatrix::single_mode(asm.mean_unconditioned())));
    for (name, rho) in states {
        let grid = wigner_of(&rho).stage("wigner")?;
        let rel = format!("wigner/{name}.csv");
        io::write_wigner(&run.path(&rel), &grid).stage("output")?;
        run.record(&name, &rel, Schema::WignerCsv);
    }
    run.lap("wigner");
    Ok((a, run.finish()?))
}

/// Parses every file listed in a manifest through its declared schema.
pub fn verify_manifest(dir: &Path) -> CliResult<RunManifest> {
    let m: RunManifest = io::read_json(&dir.join(MANIFEST)).stage("manifest")?;
    for (name, entry) in &m.outputs {
        let p = dir.join(&entry.path);
        if !p.is_file() {
            return Err(CliError::new("manifest", ErrorKind::Io, format!("{name}: {} missing", p.display())));
        }
        let parsed: steering_core::Result<()> = match entry.schema {
            Schema::Config => std::fs::read_to_string(&p)
                .map_err(Error::from)
                .and_then(|s| io::parse_config(&s, &m.overrides))
                .map(drop),
            Schema::ModelReport => io::read_json::<ModelReport>(&p).map(drop),
            Schema::Assemblage => io::read_json::<AssemblageJson>(&p).and_then(|j| Assemblage::try_from(&j)).map(drop),
            Schema::NonsignalingReport => io::read_json::<NonSignalingReport>(&p).map(drop),
            Schema::SdpResult => io::read_json::<SdpResultJson>(&p).and_then(|j| j.to_result()).map(drop),
            Schema::SweepCsv => io::read_sweep(&p).map(drop),
            Schema::RecordsCsv => io::read_records(&p).map(drop),
            Schema::WignerCsv => io::read_wigner(&p).map(drop),
            Schema::HistogramCsv => io::read_histogram_values(&p).map(drop),
            Schema::HistogramSummary => io::read_json::<HistogramSummary>(&p).map(drop),
            Schema::ChainSummary => io::read_json::<Vec<ChainSummary>>(&p).map(drop),
        };
        parsed.map_err(|e| CliError::new("manifest", ErrorKind::Io, format!("{name}: {e}")))?;
    }
    Ok(m)
}

pub fn read_sweep_csv(path: &Path) -> CliResult<Vec<SweepCsvRow>> {
    io::read_sweep(path).stage("read-sweep")
}

/// Comma-separated numbers, or `start:stop:step` (inclusive).
pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("range must be start:stop:step".into());
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || b < a {
            return Err("range needs step > 0 and stop ≥ start".into());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + h * i as f64).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
}
