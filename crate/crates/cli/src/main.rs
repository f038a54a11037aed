//! Batch verification runner for trace bounds on matrix martingales.
//!
//! Loads an optional TOML config, applies flag overrides, executes the
//! selected suite, and writes `report.json` plus CSV tables. Exit codes:
//! 0 all checks pass, 1 an inequality was violated, 2 configuration
//! error, 3 numerical failure (no finite index, oversized state space).

mod config;
mod report;
mod runner;

use clap::Parser;
use config::{FileConfig, Overrides, RunMode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "tracebound",
    about = "Verification suites for matrix-martingale tail bounds",
    version
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Suite to run.
    #[arg(long, value_enum)]
    mode: Option<RunMode>,

    /// Parameter preset: hoeffding, asymmetric, or khan-drift.
    #[arg(long)]
    preset: Option<String>,

    /// RNG seed; required for randomized modes.
    #[arg(long)]
    seed: Option<u64>,

    /// Truncation horizon for sequences and walks.
    #[arg(long)]
    horizon: Option<usize>,

    /// Monte Carlo path count.
    #[arg(long = "paths")]
    n_paths: Option<u64>,

    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match config::load_file(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("configuration error: {e}");
                return ExitCode::from(2);
            }
        },
        None => FileConfig::default(),
    };
    let over = Overrides {
        mode: cli.mode,
        preset: cli.preset,
        seed: cli.seed,
        horizon: cli.horizon,
        n_paths: cli.n_paths,
        out: cli.out,
        out_env: std::env::var_os("TRACEBOUND_OUT").map(PathBuf::from),
    };
    let cfg = match config::resolve(file, over) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };

    let (report, tables) = runner::run(&cfg);
    if let Err(e) = report::write_all(&cfg.out, &report, &tables) {
        eprintln!("cannot write reports to {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }

    for s in &report.sections {
        let status = if s.pass { "pass" } else { "FAIL" };
        println!("[{status}] {} ({})", s.name, s.tags.join(", "));
    }
    for v in &report.violations {
        println!("violation: {v}");
    }
    for f in &report.numerical_failures {
        println!("numerical failure: {f}");
    }
    println!(
        "wrote {} (exit code {})",
        cfg.out.join("report.json").display(),
        report.exit_code
    );
    ExitCode::from(report.exit_code as u8)
}
