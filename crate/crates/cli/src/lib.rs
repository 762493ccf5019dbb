//! Command-line surface for `matxai`: run distillation, Shapley values or
//! integrated gradients on files, and time the parallel kernels.
//!
//! Exit codes: 0 success, 2 bad input or arguments, 3 singular spectrum,
//! 4 too many Shapley players.

pub mod bench;
pub mod commands;
pub mod error;
pub mod io;
pub mod report;

use std::io::Write;

use clap::{Parser, Subcommand};

pub use error::CliError;
pub use report::RunReport;

#[derive(Parser, Debug)]
#[command(name = "matxai", version, about = "Matrix-form explainability methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a convolution kernel to (input, output) and score feature blocks.
    Distill(commands::DistillArgs),
    /// Exact Shapley values of a model against a baseline.
    Shapley(commands::ShapleyArgs),
    /// Integrated gradients of a model from a baseline.
    Ig(commands::IgArgs),
    /// Time an operation across sizes and worker counts.
    Bench(bench::BenchArgs),
}

/// Runs one command and writes its report. Returns the JSON text written.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (json, report_path) = match &cli.command {
        Command::Distill(a) => (commands::cmd_distill(a)?.to_json(), &a.common.report),
        Command::Shapley(a) => (commands::cmd_shapley(a)?.to_json(), &a.common.report),
        Command::Ig(a) => (commands::cmd_ig(a)?.to_json(), &a.common.report),
        Command::Bench(a) => {
            let grid = bench::BenchGrid::parse(&a.grid, a.seed).map_err(CliError::Invalid)?;
            let report = bench::run_bench(a.op, &grid)?;
            if let Some(path) = &a.csv {
                io::write_text(path, &report.to_csv())?;
            }
            (report.to_json(), &a.report)
        }
    };
    match report_path {
        Some(path) => io::write_text(path, &format!("{json}\n"))?,
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{json}") {
                // A closed reader (e.g. `| head`) is not an error.
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(CliError::Io {
                        path: "<stdout>".into(),
                        source: e,
                    })
                }
                _ => {}
            }
        }
    }
    Ok(json)
}
