use std::path::PathBuf;
use std::process::ExitCode;

use abstain::methods::gradient_suite;
use abstain_bench::{report, run, BenchmarkConfig, Mode, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abstain-bench", version, about = "Selective-classification benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment matrix.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// bounded_abstention, sgr or ood (overrides the config).
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `output`, else ./results).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute and print rank tables from a results directory.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Finite-difference check of every training loss.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        nets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode, Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Run {
            config,
            mode,
            jobs,
            seed,
            out,
        } => {
            let mut cfg = BenchmarkConfig::load(&config)?;
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let outcome = run(&cfg, &RunOptions { jobs, out })?;
            let failed = outcome.records.iter().filter(|r| r.failure.is_some()).count();
            println!(
                "{} records ({failed} failed) written to {}",
                outcome.records.len(),
                outcome.out.display()
            );
            for (c, t) in &outcome.rank_tables {
                print!("{}", abstain_bench::report::format_table(*c, t));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let r = report(&dir)?;
            print!("{}", r.text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { nets, seed } => {
            let mut ok = true;
            for case in gradient_suite(nets, seed)? {
                let pass = case.worst < 1e-4;
                ok &= pass;
                println!(
                    "{} {:<10} worst relative error {:.3e} over {} nets",
                    if pass { "PASS" } else { "FAIL" },
                    case.loss,
                    case.worst,
                    case.nets
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
