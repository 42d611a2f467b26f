use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use svmlab_cli::config::CONFIG_HELP;
use svmlab_cli::{run, ExperimentConfig, ExperimentKind, Overrides, PhiChoice, SettingChoice};

/// Penalized hinge-loss kernel machines: calibration, training, model
/// selection and verification experiments.
#[derive(Parser, Debug)]
#[command(name = "svmlab", version, after_help = CONFIG_HELP)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving rows.csv and summary.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed [config default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [config default: 1].
    #[arg(long)]
    workers: Option<usize>,
    /// Run a single regularizer [config default: both].
    #[arg(long, value_enum)]
    phi: Option<PhiChoice>,
    /// Capacity setting [config default: s1].
    #[arg(long, value_enum)]
    setting: Option<SettingChoice>,
    /// Penalty multiplier [config default: 1].
    #[arg(long)]
    c: Option<f64>,
    /// Confidence level [config default: 0.05].
    #[arg(long)]
    delta: Option<f64>,
}

fn main_inner(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        workers: cli.workers,
        phi: cli.phi,
        setting: cli.setting,
        c: cli.c,
        delta: cli.delta,
    });
    let report = run(cli.kind, &cfg)?;
    report.write(&cfg, &cli.out)?;
    eprintln!("{}: {} rows written to {}", cli.kind, report.table.rows.len(), cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
