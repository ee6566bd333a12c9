use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod run;

/// Exit codes: 0 success (warnings allowed), 2 usage/parse/validation
/// errors, 3 phase-constraint violation, 4 failed verification checks.
#[derive(Parser)]
#[command(name = "starkprop", version, about = "Closed-form propagators for driven tight-binding lattices", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment config: kernels, outputs and verification.
    Run(run::RunArgs),
    /// Build kernels and requested outputs only (no verification).
    Propagate(run::RunArgs),
    /// Run the verification suite of a config and emit a JSON verdict.
    Verify(run::RunArgs),
    /// Brute-force Schrödinger integration of the config's system.
    Oracle(run::OracleArgs),
    /// Evaluate an ordinary Bessel function: bessel N X.
    Bessel { n: i64, x: f64 },
    /// Evaluate the two-index Bessel function and cross-check it against the
    /// generating-function oracle: bessel2 N M X Y Z.
    Bessel2 {
        n: i64,
        m: i64,
        x: f64,
        y: f64,
        z: f64,
        /// Fourier grid for the oracle cross-check.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run::run(&args, run::Mode::Full),
        Command::Propagate(args) => run::run(&args, run::Mode::PropagateOnly),
        Command::Verify(args) => run::run(&args, run::Mode::VerifyOnly),
        Command::Oracle(args) => run::oracle(&args),
        Command::Bessel { n, x } => bessel(n, x),
        Command::Bessel2 { n, m, x, y, z, grid } => bessel2(n, m, x, y, z, grid),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn bessel(n: i64, x: f64) -> anyhow::Result<ExitCode> {
    let v = starkprop::bessel_j(n, x)?;
    // the evaluator is good to ~1e-14 absolute in the supported range
    println!("J_{n}({x}) = {v:.16e}  (abs error <= 1e-13)");
    Ok(ExitCode::SUCCESS)
}

fn bessel2(n: i64, m: i64, x: f64, y: f64, z: f64, grid: usize) -> anyhow::Result<ExitCode> {
    let v = starkprop::two_index_bessel(n, m, x, y, z)?;
    let oracle = starkprop::two_index_bessel_oracle(n, m, x, y, z, grid)?;
    let diff = (v.value - oracle.value).abs();
    println!(
        "J_({n},{m})({x}, {y}, {z}) = {:.16e}  (est. abs error {:.2e})",
        v.value, v.abs_error_estimate
    );
    println!(
        "oracle[grid={grid}] = {:.16e}  |difference| = {diff:.2e}{}",
        oracle.value,
        if oracle.aliasing_warning { "  (warning: grid marginal, aliasing possible)" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}
