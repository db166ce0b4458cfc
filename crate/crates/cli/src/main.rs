//! `mlnsocp` command line. Exit codes: 0 success, 1 usage error, 2 numerical
//! failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "mlnsocp", version, about = "Mixed LOS/NLOS range localization by per-node SOCP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deploy a random network and write topology.json.
    Deploy(Args),
    /// Deploy (or load) a network and write measurements.csv.
    Measure(Args),
    /// Localize every unknown node; writes estimates.csv and summary.json.
    Localize(Args),
    /// Bound surface of a boundary-anchor network; writes crlb.csv and crlb.json.
    Crlb(Args),
    /// Run a named experiment: table1, table2, cdf, rmse-surface, crlb-surface or scaling.
    Experiment {
        name: Option<String>,
        #[command(flatten)]
        args: Args,
    },
}

/// Every config key doubles as a flag of the same name.
#[derive(clap::Args)]
struct Args {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dimension: Option<String>,
    /// Side length N_d, metres.
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    /// Anchor fraction.
    #[arg(long)]
    p: Option<String>,
    /// Radio range R, metres.
    #[arg(long)]
    range: Option<String>,
    /// LOS probability.
    #[arg(long)]
    g: Option<String>,
    #[arg(long = "eta_l")]
    eta_l: Option<String>,
    #[arg(long = "eta_n")]
    eta_n: Option<String>,
    #[arg(long)]
    placement: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long)]
    topology: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("dimension", &self.dimension),
            ("side", &self.side),
            ("nodes", &self.nodes),
            ("p", &self.p),
            ("range", &self.range),
            ("g", &self.g),
            ("eta_l", &self.eta_l),
            ("eta_n", &self.eta_n),
            ("placement", &self.placement),
            ("method", &self.method),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("out", &self.out),
            ("experiment", &self.experiment),
            ("spacing", &self.spacing),
            ("scaling", &self.scaling),
            ("topology", &self.topology),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    fn resolve(&self) -> Result<config::RunConfig, CliError> {
        config::load(self.config.as_deref(), &self.overrides())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Deploy(a) => commands::deploy(&a.resolve()?),
        Command::Measure(a) => commands::measure(&a.resolve()?),
        Command::Localize(a) => commands::localize(&a.resolve()?),
        Command::Crlb(a) => commands::crlb(&a.resolve()?),
        Command::Experiment { name, args } => {
            let cfg = args.resolve()?;
            let name = name.or_else(|| cfg.experiment.clone()).ok_or_else(|| {
                CliError::Usage(format!("no experiment named; expected one of: {}", config::EXPERIMENTS.join(", ")))
            })?;
            commands::experiment(&cfg, &name)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.kind() == clap::error::ErrorKind::UnknownArgument {
                eprintln!("valid keys: {}", config::valid_keys());
            }
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) && e.to_string().starts_with("unknown key") {
                eprintln!("valid keys:");
                for (k, doc) in config::KEYS {
                    eprintln!("  {k:<10} {doc}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
