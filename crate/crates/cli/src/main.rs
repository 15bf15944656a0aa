//! `rpz` — seeded Monte Carlo experiments on random polynomials in conformal
//! bases.
//!
//! Every experiment reads one sectioned TOML config, runs a deterministic
//! trial schedule (the master seed fans out to per-trial streams, so trial t
//! draws the same coefficients regardless of thread count or which other
//! trials run), and writes a manifest, a CSV of per-run statistics, and a
//! summary with named pass/fail assertions.
//!
//! Exit codes: 0 all assertions pass, 1 an assertion failed, 2 config error,
//! 3 numerical failure.

mod config;
mod output;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Experiment;

#[derive(Parser)]
#[command(
    name = "rpz",
    version,
    about = "Random-polynomial zero laboratory on a catalog of conformal domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Sectioned TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bergman asymptotics and level-curve band checks (no randomness)
    Basis(RunArgs),
    /// Zero equidistribution statistics for random combinations
    Zeros(RunArgs),
    /// The zeros pipeline applied to the derivative P'
    Deriv(RunArgs),
    /// Almost-sure coefficient statistics (n-th root, running max, windows)
    Coeffs(RunArgs),
    /// The three hypothesis statistics side by side on one ensemble
    Grothmann(RunArgs),
    /// Peeled coefficient recovery from the contour representation
    Recover(RunArgs),
    /// Natural-boundary evidence from local Taylor radii
    Boundary(RunArgs),
    /// Print the domain catalog with parameter constraints
    ListDomains,
    /// Print the registered coefficient distributions
    ListDistributions,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::ListDomains => {
            print_domains();
            return 0;
        }
        Command::ListDistributions => {
            print_distributions();
            return 0;
        }
        Command::Basis(a) => (Experiment::Basis, a),
        Command::Zeros(a) => (Experiment::Zeros, a),
        Command::Deriv(a) => (Experiment::Deriv, a),
        Command::Coeffs(a) => (Experiment::Coeffs, a),
        Command::Grothmann(a) => (Experiment::Grothmann, a),
        Command::Recover(a) => (Experiment::Recover, a),
        Command::Boundary(a) => (Experiment::Boundary, a),
    };

    if let Err(msg) = init_threads() {
        eprintln!("config error: {msg}");
        return 2;
    }
    let cfg = match config::load(&args.config, experiment, args.seed, args.out) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };

    match run::execute(&cfg) {
        Ok(out) => {
            println!(
                "{}: {} trial(s), n = {:?}, seed {} -> {}",
                cfg.experiment,
                cfg.trials,
                cfg.n_list,
                cfg.seed,
                out.out_dir.display()
            );
            for file in &out.files {
                println!("  wrote {}", file.display());
            }
            for a in &out.assertions {
                println!(
                    "[assert] {} — {} ({})",
                    a.name,
                    if a.pass { "PASS" } else { "FAIL" },
                    a.detail
                );
            }
            if out.all_pass() {
                0
            } else {
                eprintln!("{}: assertion failure", cfg.experiment);
                1
            }
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            3
        }
    }
}

/// `RPZ_THREADS` bounds trial-level parallelism (rayon's global pool).
/// Output bytes never depend on this; only wall time does.
fn init_threads() -> Result<(), String> {
    match std::env::var("RPZ_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(format!("RPZ_THREADS: {e}")),
        Ok(v) => {
            let k: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("RPZ_THREADS: expected a positive integer, got `{v}`"))?;
            if k == 0 {
                return Err("RPZ_THREADS: must be at least 1".to_string());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| format!("RPZ_THREADS: {e}"))
        }
    }
}

fn print_domains() {
    println!("disk                unit disk; Psi(w) = w, capacity 1, r_inner 0");
    println!("ellipse             Psi(w) = a*w + b/w with a > |b| > 0 (semi-axes a +- b),");
    println!("                    capacity a, r_inner sqrt(|b|/a)");
    println!("perturbed_circle    Psi(w) = w + c*w^(-m) with m >= 1 and m*|c| < 1,");
    println!("                    capacity 1, r_inner (m*|c|)^(1/(m+1)) + 0.05 (must be < 1)");
    println!();
    println!("Configure as [domain] kind = \"...\" with parameters a, b (ellipse)");
    println!("or c, m (perturbed_circle). probes.rho_k must lie in (r_inner, 1).");
}

fn print_distributions() {
    println!("complex_gaussian    standard complex Gaussian (rotation-invariant)");
    println!("rademacher          uniform on {{-1, +1}}");
    println!("uniform_disk        uniform on a centered disk of unit second moment");
    println!("pareto              heavy tail, density a/x^(a+1) on [1, inf); alpha > 0");
    println!("pareto_sym          Pareto modulus with uniform phase; alpha > 0");
    println!("inv_factorial       deterministic control a_k = 1/k! (entire limit,");
    println!("                    outside the almost-sure hypotheses)");
    println!();
    println!("Configure as [coefficients] distribution = \"...\" (alpha for pareto*).");
}
