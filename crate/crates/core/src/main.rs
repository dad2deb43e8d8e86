use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use focklab::cli::{self, Job, Overrides};

/// Composition operators between Fock spaces: classification, components,
/// paths and certificates from JSON job files.
#[derive(Parser)]
#[command(name = "focklab", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Monte Carlo samples per norm estimate.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Sample count along paths.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every operator of the job.
    Classify { job: PathBuf },
    /// Compare two operators: component, distance bound, certificate.
    Compare { job: PathBuf, first: String, second: String },
    /// Build and verify a path between two operators (JSON lines).
    Path { job: PathBuf, first: String, second: String },
    /// Certificate that two operators are apart.
    Certify { job: PathBuf, first: String, second: String },
    /// Fock norms of a named function or weight.
    Norms { job: PathBuf, name: String },
    /// Run the built-in invariant suite.
    Selftest,
}

fn run(args: &Args) -> focklab::Result<(String, bool)> {
    let overrides = Overrides {
        seed: args.seed,
        tol: args.tol,
        budget: args.budget,
        grid: args.grid,
    };
    let load = |p: &PathBuf| Job::from_path(p, &overrides);
    let text = match &args.command {
        Command::Classify { job } => cli::cmd_classify(&load(job)?)?,
        Command::Compare { job, first, second } => cli::cmd_compare(&load(job)?, first, second)?,
        Command::Path { job, first, second } => cli::cmd_path(&load(job)?, first, second)?,
        Command::Certify { job, first, second } => cli::cmd_certify(&load(job)?, first, second)?,
        Command::Norms { job, name } => cli::cmd_norms(&load(job)?, name)?,
        Command::Selftest => return cli::cmd_selftest(args.seed.unwrap_or(0)),
    };
    Ok((text, true))
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(threads) = std::env::var("FOCKLAB_THREADS").ok().and_then(|s| s.parse().ok()) {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&args) {
        Ok((text, ok)) => {
            let written = match &args.out {
                Some(path) => std::fs::write(path, text + "\n"),
                None => {
                    println!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
