use std::path::PathBuf;
use std::process::ExitCode;

use ampc_cli::commands::{self, CliError, Overrides, RunRequest};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ampc", version, about = "Adaptive tube MPC for uncertain linear systems with input-rate limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario document (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts, logs and plot data.
    #[arg(long, env = "AMPC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the contraction factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Overrides the prediction horizon.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the gain, terminal set and tubes and print their certificates.
    Synthesize(Common),
    /// Run the closed loop over sampled initial states and estimates.
    Run {
        #[command(flatten)]
        common: Common,
        /// Number of runs taken from the sampling grid.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: Option<u64>,
        /// Overrides the sampling and simulation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Single run from the configured initial state and estimate.
        #[arg(long, conflicts_with = "runs")]
        nominal: bool,
    },
    /// Convert run logs into long-format plot data.
    ExportPlots {
        #[arg(long, env = "AMPC_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result: Result<(), CliError> = match cli.command {
        Command::Synthesize(c) => {
            let o = Overrides {
                seed: None,
                gamma: c.gamma,
                horizon: c.horizon,
            };
            commands::cmd_synthesize(&c.config, &c.out_dir, &o, &mut stdout)
        }
        Command::Run {
            common,
            runs,
            seed,
            nominal,
        } => {
            let req = RunRequest {
                config: &common.config,
                out_dir: &common.out_dir,
                overrides: Overrides {
                    seed,
                    gamma: common.gamma,
                    horizon: common.horizon,
                },
                runs: runs.map(|r| r as usize),
                nominal,
            };
            commands::cmd_run(&req, &mut stdout).map(|_| ())
        }
        Command::ExportPlots { out_dir } => commands::cmd_export_plots(&out_dir, &mut stdout).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::from(commands::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
