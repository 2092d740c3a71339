use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use avrbcd_bench::config::BenchConfig;
use avrbcd_bench::runner::{reference_optimum, run_bench, Prepared};
use avrbcd_bench::verify;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Runs the AVRBCD benchmark protocol")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every configured solver and seed, write CSVs and a plot.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set epochs=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Compute (or load) the reference optimum only.
    Ref {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the built-in equivalence, weight and schedule checks.
    Verify,
}

fn load(path: &PathBuf, set: &[String]) -> anyhow::Result<BenchConfig> {
    let cfg = BenchConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(cfg.with_overrides(set.iter().map(String::as_str))?)
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run { config, set } => {
            let cfg = load(&config, &set)?;
            let out = run_bench(cfg.clone())?;
            print!("{}", out.summary(&cfg));
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            Ok(if out.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Ref { config, set } => {
            let cfg = load(&config, &set)?;
            let prep = Prepared::new(cfg)?;
            let opt = reference_optimum(&prep)?;
            println!("F* = {:.17e}", opt.value);
            println!("gradient mapping norm = {:.3e}", opt.grad_map);
            println!("converged = {} (work {})", opt.converged, opt.work);
            if !opt.converged {
                eprintln!("warning: tolerance {:e} not reached; best value reported", prep.config.ref_tol);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify => {
            let checks = verify::all()?;
            for c in &checks {
                println!("{c}");
            }
            Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
