// stdout may be a closed pipe (`fracosc solve | head`); results are on disk
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Status;
use config::{Overrides, RunConfig};
use error::CliError;
use output::OutDir;

/// Numerical lab for (−Δ)ₚˢu = λα(x)f(u) with an oscillating f.
#[derive(Parser, Debug)]
#[command(name = "fracosc", version)]
struct Cli {
    /// TOML run configuration, or a manifest.toml from an earlier solve.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Fix λ, overriding problem.lambda and problem.lambda_factor.
    #[arg(long, global = true, value_name = "X", allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Seed for the solver starts and the Monte-Carlo streams.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Monte-Carlo sample pairs for verify-lemma.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<u64>,
    /// Run solve even when the λ-interval is empty.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory (default from output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// κ, C, K and the λ-interval.
    Constants,
    /// Monte-Carlo check of the cone seminorm against its closed-form bound.
    VerifyLemma,
    /// Bump table, growth diagnostics and a plot-ready profile of f and F.
    Nonlinearity,
    /// Distinct critical points of the grid energy.
    Solve,
    /// Sampled φ(r) against its chain bound.
    PhiEstimate,
    /// J_λ(ζ·w) bounds along the bump ends.
    Probe,
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides { lambda: cli.lambda, seed: cli.seed, budget: cli.budget, out: cli.out.clone() });
    let mut out = OutDir::acquire(&cfg.output.dir)?;
    let status = match cli.command {
        Command::Constants => commands::constants(&mut cfg, &mut out),
        Command::VerifyLemma => commands::verify_lemma(&mut cfg, &mut out),
        Command::Nonlinearity => commands::nonlinearity(&mut cfg, &mut out),
        Command::Solve => commands::solve(&mut cfg, &mut out, cli.force),
        Command::PhiEstimate => commands::phi_estimate(&mut cfg, &mut out),
        Command::Probe => commands::probe(&mut cfg, &mut out),
    }?;
    for p in out.written() {
        say!("wrote {}", p.display());
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Warning) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Core(fracosc::Error::Overflow(_)) => {
                    eprintln!("hint: set nonlinearity.log_domain = true");
                    ExitCode::from(1)
                }
                CliError::Core(fracosc::Error::Numerical(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
