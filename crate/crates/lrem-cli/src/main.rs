//! `lrem`: factorize, classify, solve, regularize, scan and simulate linear rational
//! expectations models from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrem::error::Error;
use lrem::likelihood::GridAxis;

#[derive(Parser, Debug)]
#[command(name = "lrem", version, about = "Solve linear rational expectations models in the frequency domain")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Model description in JSON.
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// One of the built-in models: ar1, cagan, mixed, nongeneric.
    #[arg(long, global = true, value_name = "NAME")]
    pub builtin: Option<String>,
    /// Override a model parameter; repeatable. Greek letters are accepted as names.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    /// Write reports and tables into this directory instead of standard output.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the JSON report on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Largest accepted relative factorization residual. Can only tighten the default.
    #[arg(long, global = true, value_name = "TOL", default_value_t = lrem::whf::FACTOR_TOL)]
    pub factor_tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Wiener-Hopf factorization, partial indices and its certificate.
    Factorize,
    /// Existence and uniqueness of a stable solution.
    Classify,
    /// Particular solution and kernel basis as impulse responses.
    Solve(Horizon),
    /// The solution that minimizes a regularizing penalty.
    Regularize {
        #[command(flatten)]
        horizon: Horizon,
        /// Regularizer as inline JSON or a path to a JSON file; defaults to the model's own.
        #[arg(long, value_name = "JSON|FILE")]
        regularizer: Option<String>,
    },
    /// Limiting likelihood over a parameter grid.
    Scan(ScanArgs),
    /// Simulate sample paths of the solution.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct Horizon {
    /// Last lag of the impulse responses.
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Grid axis `name=lo:hi:steps`; one per free parameter.
    #[arg(long, required = true, num_args = 1.., value_parser = parse_axis)]
    pub grid: Vec<GridAxis>,
    /// True parameters, e.g. `beta0=2,psi0=2`; a trailing 0 on the name is optional.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_assignment)]
    pub truth: Vec<(String, f64)>,
    /// Scan the regularized family instead of the full solution set.
    #[arg(long)]
    pub regularized: bool,
    /// Also evaluate the finite-sample likelihood on one simulated path of this length.
    #[arg(long, value_name = "T")]
    pub finite_sample: Option<usize>,
    /// Report grid values only, without polishing local minima.
    #[arg(long)]
    pub no_minimize: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Sample length.
    #[arg(long = "T", visible_alias = "length", value_name = "T")]
    pub t: usize,
    /// Number of independent replications; more than one needs `--out`.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Pre-sample draws discarded before the first observation.
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    /// Simulate the regularized solution rather than the particular one.
    #[arg(long)]
    pub regularized: bool,
}

/// A failed run: exit status, reason code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub reason: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, reason: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            reason,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(1, "invalid-input", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(1, "io", message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, reason) = match &e {
            Error::CircleSingularity { .. } => (3, "circle-singularity"),
            Error::NoSolution { .. } => (4, "no-solution-generic"),
            Error::Factorization(_) | Error::WindingMismatch { .. } | Error::Convergence(_) => (2, "factorization-failed"),
            Error::Parse(_) | Error::Model(_) | Error::Regularizer(_) | Error::Dimension(_) => (1, "invalid-input"),
            _ => (2, "numerical-failure"),
        };
        Self::new(code, reason, e.to_string())
    }
}

/// Maps Greek parameter letters to the names used in model files.
pub fn canonical_name(name: &str) -> String {
    match name {
        "α" => "alpha",
        "β" => "beta",
        "θ" => "theta",
        "ψ" => "psi",
        other => other,
    }
    .to_string()
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("'{s}' is not NAME=VALUE"))?;
    let value: f64 = value
        .trim()
        .replace('−', "-")
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    if !value.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok((canonical_name(name.trim()), value))
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    s.parse::<GridAxis>().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = commands::Context::new(cli.global)?;
    match cli.command {
        Command::Factorize => commands::factorize(&ctx),
        Command::Classify => commands::classify(&ctx),
        Command::Solve(h) => commands::solve(&ctx, h.horizon),
        Command::Regularize { horizon, regularizer } => commands::regularize(&ctx, horizon.horizon, regularizer.as_deref()),
        Command::Scan(args) => commands::scan(&ctx, &args),
        Command::Simulate(args) => commands::simulate(&ctx, &args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lrem: {}: {}", f.reason, f.message);
            ExitCode::from(f.code)
        }
    }
}
