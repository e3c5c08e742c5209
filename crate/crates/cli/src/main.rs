use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steering_cli::{
    cmd_analyze, cmd_assemblage, cmd_model, cmd_sdp, cmd_simulate, cmd_sweep, config_help, parse_values, CliError,
    CliResult, ErrorKind, LoadedConfig,
};
use steering_core::steering::SweepAxis;
use steering_core::ExperimentConfig;

#[derive(Parser)]
#[command(name = "steering", version, about = "Model, simulate and certify EPR steering with hybrid entangled light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `key=value`, dotted for nested keys; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Negativity, tier fidelity, Alice's multiphoton weight and truncation tails.
    #[command(after_long_help = config_help())]
    Model(Common),
    /// Assemblage of the modelled state.
    Assemblage(Common),
    /// Optimal steering functional of a stored assemblage.
    Sdp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assemblage: PathBuf,
        /// Solve LHS membership instead.
        #[arg(long)]
        membership: bool,
    },
    /// S_min over one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// m_A, R or eta_A.
        #[arg(long)]
        axis: SweepAxis,
        /// `v1,v2,...` or `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Keep R as configured instead of minimizing over it.
        #[arg(long)]
        fixed_r: bool,
    },
    /// Synthetic heralded records.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Sample the product of the marginals instead.
        #[arg(long)]
        null_control: bool,
    },
    /// Reconstruct, certify and attach error bars to a records file.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        records: PathBuf,
    },
    /// Print the default config.
    #[command(after_long_help = config_help())]
    Defaults,
}

fn load(c: &Common) -> CliResult<LoadedConfig> {
    LoadedConfig::load(c.config.as_deref(), &c.overrides)
}

fn run(cli: Cli) -> CliResult<String> {
    let summary = match cli.command {
        Command::Model(c) => {
            let (report, _) = cmd_model(&load(&c)?, &c.out)?;
            serde_json::to_string_pretty(&report).expect("report serializes")
        }
        Command::Assemblage(c) => {
            let (asm, _) = cmd_assemblage(&load(&c)?, &c.out)?;
            format!("assemblage: {} settings, Bob dim {}", asm.m_a(), asm.dim())
        }
        Command::Sdp {
            common,
            assemblage,
            membership,
        } => {
            let (r, _) = cmd_sdp(&load(&common)?, &assemblage, membership, &common.out)?;
            format!(
                "objective {:.6e} ({:?}, {} iterations, gap {:.1e}); steering certified: {}",
                r.objective,
                r.status,
                r.iterations,
                r.duality_gap,
                r.certifies_steering()
            )
        }
        Command::Sweep {
            common,
            axis,
            values,
            fixed_r,
        } => {
            let values = parse_values(&values).map_err(|m| CliError::new("sweep", ErrorKind::Config, m))?;
            let (rows, _) = cmd_sweep(&load(&common)?, axis, &values, !fixed_r, &common.out)?;
            rows.iter()
                .map(|r| format!("{axis}={} S_min={:.6e} R={:.4}", r.axis_value, r.s_min, r.r))
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::Simulate { common, null_control } => {
            let (records, _) = cmd_simulate(&load(&common)?, null_control, &common.out)?;
            format!("{} records", records.len())
        }
        Command::Analyze { common, records } => {
            let (a, _) = cmd_analyze(&load(&common)?, &records, &common.out)?;
            format!(
                "S_min {:.6e}; MH mean {:.6e}, std {:.3e}, separation {:.2} sigma ({} values)",
                a.sdp.objective,
                a.histogram.mean,
                a.histogram.std,
                a.histogram.separation_sigmas,
                a.histogram.s_values.len()
            )
        }
        Command::Defaults => serde_json::to_string_pretty(&ExperimentConfig::default()).expect("config serializes"),
    };
    Ok(summary)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(s) => {
            println!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => exit_with(&e),
    }
}

fn exit_with(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
