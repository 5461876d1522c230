use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use piq_cli::run::Overrides;
use piq_cli::CliError;

/// Prediction intervals for regression: synthetic benchmarks, pipeline
/// runs, and report consolidation.
#[derive(Parser)]
#[command(name = "piq", version, about)]
struct Cli {
    /// Override every seed in the run configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory (also: PIQ_OUT_ROOT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a full pipeline run from a json configuration file.
    Run {
        /// Path to the run configuration.
        config: PathBuf,
    },
    /// Generate a synthetic benchmark table plus its schema sidecar.
    Synth {
        /// Noise profile: constant, linear, or sinusoidal.
        #[arg(long)]
        law: String,
        /// Scale of the noise profile (sigma, slope, or amplitude).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Number of rows.
        #[arg(long)]
        n: usize,
    },
    /// Consolidate a completed run directory into summary.txt.
    Report {
        /// Run directory containing manifest.json.
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("piq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let overrides = Overrides {
                seed: cli.seed,
                out: cli.out,
            };
            let outcome = piq_cli::run::cmd_run(&config, &overrides)?;
            println!(
                "run complete: {} method reports, {} sweep levels -> {}",
                outcome.reports.len(),
                outcome.swept_levels,
                outcome.output_dir.display()
            );
            for report in &outcome.reports {
                println!(
                    "  {} alpha={}: picp={:.4} mpiw={:.4} mae={:.4} rmse={:.4}",
                    report.method.name(),
                    report.alpha,
                    report.picp,
                    report.mpiw,
                    report.mae,
                    report.rmse
                );
            }
            Ok(())
        }
        Command::Synth { law, scale, n } => {
            let seed = cli.seed.unwrap_or(0);
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            let outcome = piq_cli::synth::cmd_synth(&law, scale, n, seed, &out_dir)?;
            println!(
                "wrote {} rows to {} (schema {})",
                outcome.rows,
                outcome.csv.display(),
                outcome.schema.display()
            );
            Ok(())
        }
        Command::Report { dir } => {
            let outcome = piq_cli::report::cmd_report(&dir)?;
            print!("{}", outcome.summary);
            Ok(())
        }
    }
}
