//! `bbdlab`: run one experiment and write its output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use bbd_core::bbd::CoefficientMode;
use bbd_core::harness::{
    load_config, run_experiment, write_error_report, Clock, ExperimentConfig, ExperimentKind,
    RunOptions,
};
use bbd_core::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bbdlab",
    version,
    about = "Lagrangian training dynamics and bulk/boundary decomposition experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory (default: the config's `output_dir`, else `out/<kind>`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    coefficient_mode: Option<Mode>,

    /// Also write gnuplot data files.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train with SGD, gradient flow or the damped second-order flow.
    RunDynamics,
    /// Check L = L_bulk + L_boundary on random states in both coefficient modes.
    AuditBbd,
    /// Compare per-layer bulk terms under a layer-index shift.
    SymmetryCheck,
    /// Redraw the data with internal fields fixed and compare bulk values.
    DataIndependence,
    /// Ring lattice versus truncated continuum over a resolution ladder.
    ContinuumStudy,
    /// Reverse-mode gradients versus central differences.
    Gradcheck,
}

#[derive(ValueEnum, Clone, Copy)]
enum Mode {
    AsPrinted,
    ChainRule,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::RunDynamics => ExperimentKind::RunDynamics,
            Command::AuditBbd => ExperimentKind::AuditBbd,
            Command::SymmetryCheck => ExperimentKind::SymmetryCheck,
            Command::DataIndependence => ExperimentKind::DataIndependence,
            Command::ContinuumStudy => ExperimentKind::ContinuumStudy,
            Command::Gradcheck => ExperimentKind::Gradcheck,
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = cli.command.kind();
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(Error::validation(
                "kind",
                format!(
                    "config is for `{}` but `{}` was requested",
                    k.name(),
                    kind.name()
                ),
            ));
        }
    }
    cfg.kind = Some(kind);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.coefficient_mode {
        cfg.coefficient_mode = match mode {
            Mode::AsPrinted => CoefficientMode::AsPrinted,
            Mode::ChainRule => CoefficientMode::ChainRule,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.kind().name()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = resolve(&cli);
    let dir = out_dir(&cli, cfg.as_ref().ok());
    let result = cfg.and_then(|cfg| {
        let opts = RunOptions {
            out_dir: dir.clone(),
            threads: cli.threads,
            clock: Clock::from_env(),
            gnuplot: cli.gnuplot,
        };
        run_experiment(&cfg, &opts)
    });
    match result {
        Ok(manifest) => {
            println!(
                "{} finished: {} files in {}",
                manifest.kind,
                manifest.files.len() + 1,
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match write_error_report(&dir, &e) {
                Ok(p) => eprintln!("error report: {}", p.display()),
                Err(w) => eprintln!("could not write error report: {w}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
