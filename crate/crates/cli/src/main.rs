//! `aomp`: seeded sparse recovery runs from the command line.

mod commands;
mod config;
mod manifest;
mod solvers;

use std::path::PathBuf;
use std::process::ExitCode;

use aomp_core::Ensemble;
use clap::{Args, Parser, Subcommand};

use crate::config::SolverName;

#[derive(Parser, Debug)]
#[command(
    name = "aomp",
    version,
    about = "Sparse recovery by best-first search, with baselines and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Base seed of every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for trial-level parallelism. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Root directory for run outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recover one instance and print the result as JSON.
    ///
    /// Exit status 0 when the residue test is met, 2 when the solver stopped
    /// without meeting it, 1 on error.
    Recover {
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Instance JSON to replay instead of generating one.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Exact recovery rate, ANMSE and run time over a range of sparsities.
    Sweep {
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        k_step: Option<usize>,
    },
    /// 50% success boundary over a (M/N, K/M) grid.
    Phase {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(short = 'N', long = "n")]
        n: Option<usize>,
        /// M/N values: `a,b,c` or `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
        /// K/M values: `a,b,c` or `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        rhos: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_parser = parse_ensemble)]
        ensemble: Option<Ensemble>,
    },
    /// Block-wise recovery of an image that is sparse in the 8x8 Haar basis.
    Image {
        #[command(flatten)]
        search: SearchArgs,
        /// 8-bit PGM with sides divisible by 8; a synthetic picture otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        /// Haar coefficients kept per block.
        #[arg(short = 'K', long = "k")]
        k: Option<usize>,
        /// Measurements per block.
        #[arg(short = 'M', long = "m")]
        m: Option<usize>,
        /// Draw a new matrix for every block.
        #[arg(long)]
        redraw_per_block: Option<bool>,
    },
    /// Restricted isometry constants and the recovery conditions built on them.
    Rip {
        #[arg(short = 'M', long = "m")]
        m: Option<usize>,
        #[arg(short = 'N', long = "n")]
        n: Option<usize>,
        /// Use the N x N identity.
        #[arg(long)]
        identity: Option<bool>,
        /// Text matrix file: one row per line, commas or spaces between entries.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Entry deviation of the generated matrix (default 1/sqrt(M)).
        #[arg(long)]
        matrix_std: Option<f64>,
        /// Largest order L to compute.
        #[arg(long)]
        lmax: Option<usize>,
        #[arg(short = 'K', long = "k")]
        k: Option<usize>,
        #[arg(short = 'B', long = "b")]
        b: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Single-threaded timing of the selected solvers on paired instances.
    Bench {
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        problem: ProblemArgs,
    },
}

#[derive(Args, Debug, Default)]
pub struct SearchArgs {
    /// Solvers to run, comma separated.
    #[arg(long = "solver", value_enum, value_delimiter = ',')]
    pub solvers: Option<Vec<SolverName>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Path length limit: a number, `k` or `rho-max`.
    #[arg(long)]
    pub kmax: Option<String>,
    /// Paths opened at initialization (I).
    #[arg(long)]
    pub initial_paths: Option<usize>,
    /// Children per expansion (B).
    #[arg(long)]
    pub branching: Option<usize>,
    /// Live path limit (P).
    #[arg(long)]
    pub max_paths: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Check the search invariants after every expansion.
    #[arg(long)]
    pub audit: Option<bool>,
}

#[derive(Args, Debug, Default)]
pub struct ProblemArgs {
    #[arg(short = 'N', long = "n")]
    pub n: Option<usize>,
    #[arg(short = 'M', long = "m")]
    pub m: Option<usize>,
    #[arg(short = 'K', long = "k")]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_ensemble)]
    pub ensemble: Option<Ensemble>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Entry deviation of the measurement matrix (default 1/N).
    #[arg(long)]
    pub matrix_std: Option<f64>,
}

fn parse_ensemble(text: &str) -> Result<Ensemble, String> {
    Ensemble::ALL
        .into_iter()
        .find(|e| e.name() == text.to_ascii_lowercase())
        .ok_or_else(|| format!("unknown ensemble `{text}` (gaussian, uniform, cars)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
