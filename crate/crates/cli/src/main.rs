use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lieproc::catalog::{self, MODULES};
use lieproc::{run_file, RunOptions, Status};

#[derive(Parser)]
#[command(name = "lieproc", version, about = "Seeded experiment batteries for multiplicative processes on Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a JSON config.
    Run {
        config: PathBuf,
        /// Exit 1 on inconclusive results.
        #[arg(long)]
        strict: bool,
        /// Worker threads (reports do not depend on it).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the experiment catalog.
    ListExperiments {
        #[arg(long)]
        json: bool,
        /// Only experiments of this module.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(MODULES))]
        module: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments { json, module } => {
            let entries = catalog::entries(module.as_deref());
            if json {
                println!("{}", serde_json::to_string_pretty(&entries).expect("catalog serialises"));
            } else {
                print!("{}", catalog::render_text(&entries));
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, strict, jobs, out } => {
            let opts = RunOptions { strict, jobs: jobs.map(|j| j as usize), out };
            let progress = |o: &lieproc::Outcome| {
                println!("{:<12} {:<28} {:<24} {:.2}s", o.status.label(), o.name, o.kind, o.elapsed.as_secs_f64());
                for w in &o.warnings {
                    println!("  warning: {w}");
                }
                if let Some(e) = &o.error {
                    eprintln!("error in experiment `{}`: {e}", o.name);
                }
            };
            match run_file(&config, &opts, progress) {
                Ok(summary) => {
                    let count = |s: Status| summary.outcomes.iter().filter(|o| o.status == s).count();
                    println!(
                        "{} passed, {} failed, {} inconclusive, {} errors; reports in {}",
                        count(Status::Pass),
                        count(Status::Fail),
                        count(Status::Inconclusive),
                        count(Status::Error),
                        summary.output_dir.display()
                    );
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
