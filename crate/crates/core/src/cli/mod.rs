//! Command-line front end: `span-lab <subcommand> [flags]`.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 validation or usage error,
//! 3 numerical failure.

mod commands;
pub mod config;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Angle, ExperimentConfig, Window};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "span-lab",
    version,
    about = "Completeness of Gaussian translates: experiments and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Counting-function density of a generated set.
    Density(ExperimentConfig),
    /// Partial sums of S(ε) = Σ|λ|^{-2-ε}.
    Sums(ExperimentConfig),
    /// Gram matrix and right-hand side for a finite node set.
    Gram(ExperimentConfig),
    /// Squared distance from the target to the span of N translates.
    Project(ExperimentConfig),
    /// Residual curve over a schedule; with --a, the paired dilation experiment.
    Curve(ExperimentConfig),
    /// Terminal residuals across a density grid.
    Phase(ExperimentConfig),
    /// Indicator estimates of a canonical product along rays.
    Indicator(ExperimentConfig),
    /// Truncated Fock-norm trend of the genus-2 product per density.
    Probe(ExperimentConfig),
    /// Real-line identity and truncated Fock norms for translates of φ.
    BargmannCheck(ExperimentConfig),
    /// The convolution identity φ_a ∗ φ_b ∝ φ and its constant.
    ConvCheck(ExperimentConfig),
    /// Two-sided Gaussian envelope fit of a Fourier modulus.
    Envelope(ExperimentConfig),
    /// Closed forms against quadrature at seeded random points.
    Selftest(SelftestArgs),
}

#[derive(Debug, clap::Args)]
struct SelftestArgs {
    /// Relative tolerance every check must meet.
    #[arg(long, default_value_t = selftest::DEFAULT_TOL)]
    tol: f64,
    /// Random parameter points per check.
    #[arg(long, default_value_t = selftest::DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
    seed: u64,
    /// Print a JSON result object instead of the table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON object to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERIC
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("LAB_THREADS must be a positive integer, got {v:?}"))?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_VALIDATION;
    }
    let (name, cfg) = match cli.command {
        Command::Selftest(a) => return run_selftest(a),
        Command::Density(c) => ("density", c),
        Command::Sums(c) => ("sums", c),
        Command::Gram(c) => ("gram", c),
        Command::Project(c) => ("project", c),
        Command::Curve(c) => ("curve", c),
        Command::Phase(c) => ("phase", c),
        Command::Indicator(c) => ("indicator", c),
        Command::Probe(c) => ("probe", c),
        Command::BargmannCheck(c) => ("bargmann-check", c),
        Command::ConvCheck(c) => ("conv-check", c),
        Command::Envelope(c) => ("envelope", c),
    };
    match cfg.load().and_then(|c| commands::dispatch(name, c)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_selftest(a: SelftestArgs) -> i32 {
    if !(a.tol > 0.0) || a.points == 0 {
        eprintln!("error: --tol must be positive and --points nonzero");
        return EXIT_VALIDATION;
    }
    let report = match selftest::run_selftest(a.seed, a.points, a.tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &a.out {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_VALIDATION;
        }
    }
    let mut text = String::new();
    if a.json {
        text = json + "\n";
    } else {
        text += &format!(
            "{:<22} {:>6} {:>12} {:>10}  result\n",
            "check", "points", "max rel err", "tol"
        );
        for c in &report.checks {
            text += &format!(
                "{:<22} {:>6} {:>12.3e} {:>10.1e}  {}\n",
                c.name,
                c.points,
                c.max_relative_error,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
    }
    // A closed pipe downstream is not a selftest failure.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    if report.passed {
        EXIT_OK
    } else {
        for c in report.failures() {
            eprintln!(
                "selftest failure: {} max relative error {:e} exceeds {:e} at {:?}",
                c.name, c.max_relative_error, c.tolerance, c.worst
            );
        }
        EXIT_SELFTEST
    }
}
