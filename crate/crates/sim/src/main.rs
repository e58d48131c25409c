use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inspect_sim::checks::{run_check, Check};
use inspect_sim::{plan_file, scenario_schema, Overrides};

#[derive(Parser)]
#[command(name = "inspect-plan", version, about = "Plan inspection and exploration missions from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the planner selected by a scenario file.
    Plan {
        scenario: PathBuf,
        /// Output directory (default: scenario `output_dir`, then $INSPECT_PLAN_OUT, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress the summary on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Compare a fast routine against its brute-force oracle.
    Oracle {
        #[arg(value_enum)]
        check: Check,
    },
    /// Print the scenario JSON schema.
    Schema,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan { scenario, out, seed, quiet } => {
            let (report, dir, result) = plan_file(&scenario, &Overrides { out, seed });
            match result {
                Ok(()) => {
                    if !quiet {
                        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                        println!("outputs written to {}", dir.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", serde_json::json!({ "error": e.block() }));
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Oracle { check } => {
            let r = run_check(check);
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            if r.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&scenario_schema()).expect("schema serializes"));
            ExitCode::SUCCESS
        }
    }
}
