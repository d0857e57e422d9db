use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use periflow::runner::{parse_config, run_scenario, Scenario, CONFIG_HELP};

#[derive(Parser)]
#[command(name = "periflow", version, about = "Time-periodic solutions of the heat equation on moving closed curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a config file.
    #[command(after_help = CONFIG_HELP)]
    Run {
        /// INI-style config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides [output] directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for random probes and subsampling; overrides [output] seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<20} {}", s.name(), s.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => {
            let started = Instant::now();
            let result = parse_config(&config).and_then(|mut c| {
                if let Some(dir) = out {
                    c.output_dir = dir;
                }
                if let Some(seed) = seed {
                    c.seed = seed;
                }
                run_scenario(&c).map(|m| (c, m))
            });
            match result {
                Ok((c, manifest)) => {
                    for check in &manifest.checks {
                        let verdict = if check.passed { "pass" } else { "FAIL" };
                        println!(
                            "{verdict:<4} {:<28} {:.6e} {} {:.6e}",
                            check.name, check.value, check.relation, check.threshold
                        );
                    }
                    println!("outputs in {}", c.output_dir.display());
                    println!("wall-clock {:.3} s", started.elapsed().as_secs_f64());
                    if manifest.passed() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("error: scenario {} failed one or more checks", manifest.scenario);
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
