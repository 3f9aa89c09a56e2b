use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rotodiag_cli::config::CONFIG_HELP;
use rotodiag_cli::{
    apply_overrides, cmd_cluster, cmd_diagnose, cmd_factor, cmd_features, cmd_gen, cmd_pipeline, CliError,
    RunConfig, StageInputs, OUT_DIR_ENV,
};

/// Unsupervised fault diagnostics for rotating machinery.
#[derive(Parser)]
#[command(name = "rotodiag", version, after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; without it the built-in six-state demo runs
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: windows.csv and truth.csv
    #[command(after_long_help = CONFIG_HELP)]
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Extract the 37 features per window: features.csv
    #[command(after_long_help = CONFIG_HELP)]
    Features {
        #[command(flatten)]
        common: Common,
        /// Windows CSV (default: the configured input or <out>/windows.csv)
        #[arg(long)]
        windows: Option<PathBuf>,
    },
    /// Select k, fit the mixture and assign windows to clusters
    #[command(after_long_help = CONFIG_HELP)]
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Features CSV (default: <out>/features.csv)
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Apply the spectrum rules and map clusters to machine states
    #[command(after_long_help = CONFIG_HELP)]
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        windows: Option<PathBuf>,
        /// Assignments CSV (default: <out>/assignments.csv)
        #[arg(long)]
        assignments: Option<PathBuf>,
    },
    /// Tune and fit the random forest, then rank features per cluster
    #[command(after_long_help = CONFIG_HELP)]
    Factor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        assignments: Option<PathBuf>,
    },
    /// Run every stage in order
    #[command(after_long_help = CONFIG_HELP)]
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, common.seed, common.out.clone());
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let entries = match cli.command {
        Command::Gen { common } => cmd_gen(&load(&common)?)?,
        Command::Features { common, windows } => {
            let inputs = StageInputs { windows, ..Default::default() };
            cmd_features(&load(&common)?, &inputs)?
        }
        Command::Cluster { common, features } => {
            let inputs = StageInputs { features, ..Default::default() };
            cmd_cluster(&load(&common)?, &inputs)?
        }
        Command::Diagnose { common, windows, assignments } => {
            let inputs = StageInputs { windows, assignments, ..Default::default() };
            cmd_diagnose(&load(&common)?, &inputs)?
        }
        Command::Factor { common, features, assignments } => {
            let inputs = StageInputs { features, assignments, ..Default::default() };
            cmd_factor(&load(&common)?, &inputs)?
        }
        Command::Pipeline { common } => {
            let cfg = load(&common)?;
            let manifest = cmd_pipeline(&cfg)?;
            manifest.artifacts.into_values().collect()
        }
    };
    for e in entries {
        println!("{}  {}", e.sha256, e.file);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}
