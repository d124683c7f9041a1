//! `thinfb`: solve, diagnose and validate thin one-phase free boundary scenarios.

mod commands;
mod report;
mod scenario;

use clap::{Parser, Subcommand};
use report::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "thinfb", version, about = "Thin one-phase free boundary laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a scenario; writes field, mask, energy and diagnostics.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for `random:` boundary data.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Free boundary, λ, growth and Weiss diagnostics of a field file.
    Diagnose {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "diagnostics")]
        out: PathBuf,
    },
    /// Weiss density profile about a slab point.
    Weiss {
        #[arg(long)]
        field: PathBuf,
        /// Comma-separated thin coordinates.
        #[arg(long)]
        center: String,
        /// Comma-separated increasing radii; chosen to fit when omitted.
        #[arg(long)]
        radii: Option<String>,
        #[arg(long, default_value = "weiss")]
        out: PathBuf,
    },
    /// Strata membership, symmetry distances and free boundary β tables.
    Strata {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.125)]
        r_min: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long)]
        point: String,
        /// Number of candidate subspaces per scale.
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value = "strata")]
        out: PathBuf,
    },
    /// Log-cutoff competitor test of a two-dimensional cone.
    Competitor {
        /// Cone field; when omitted the trivial cone is built for `--alpha`.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated values of R.
        #[arg(long, default_value = "2,4")]
        big_r: String,
        #[arg(long, default_value = "competitor")]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Validate {
        /// Criterion id, tag (operator, weiss, energy, solver, lambda, diagnostics, strata) or name fragment.
        #[arg(long)]
        filter: Option<String>,
        /// Directory for validate.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out, seed } => commands::solve(&config, out, seed),
        Command::Diagnose { field, out } => commands::diagnose(&field, &out),
        Command::Weiss { field, center, radii, out } => commands::weiss(&field, &center, radii.as_deref(), &out),
        Command::Strata { field, k, epsilon, r_min, r_max, point, budget, out } => {
            let args = commands::StrataArgs { k, epsilon, r_min, r_max, point, budget };
            commands::strata(&field, &args, &out)
        }
        Command::Competitor { field, alpha, big_r, out } => {
            let rs: Vec<f64> = big_r
                .split(',')
                .map(|x| x.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Config(format!("cannot parse R list '{big_r}'")))?;
            commands::competitor(field.as_deref(), alpha, &rs, &out)
        }
        Command::Validate { filter, out } => commands::validate(filter.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
