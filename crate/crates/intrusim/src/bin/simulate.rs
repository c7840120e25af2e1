//! Command-line harness: run one scenario file against one config file.
//!
//! Exit codes: 0 when every expectation passes, 1 when any fails, 2 on
//! input errors (unreadable files, parse errors, bad horizon).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use intrusim::harness;
use intrusim::transcript;

#[derive(Parser)]
#[command(
    name = "simulate",
    about = "Run a scripted intrusion scenario against the simulated alarm",
    version
)]
struct Args {
    /// Config file (`key = value`; empty file means all defaults).
    #[arg(long)]
    config: PathBuf,

    /// Scenario file (`at ...` events and `expect ...` checks).
    #[arg(long)]
    scenario: PathBuf,

    /// Run horizon in ms; defaults to the last scripted time + 30000.
    #[arg(long)]
    horizon: Option<u64>,

    /// Write the JSONL transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,

    /// Print nothing; the exit code carries the result.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &Args) -> Result<bool, String> {
    let config_text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let config = intrusim::parse_config(&config_text)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;

    let scenario_text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| format!("cannot read {}: {e}", args.scenario.display()))?;
    let scenario = intrusim::parse_scenario(&scenario_text)
        .map_err(|e| format!("{}: {e}", args.scenario.display()))?;

    let horizon = args
        .horizon
        .unwrap_or_else(|| intrusim::default_horizon_ms(&scenario));
    let output = intrusim::run(&config, &scenario, horizon).map_err(|e| e.to_string())?;

    if let Some(path) = &args.transcript {
        transcript::write_jsonl(path, &output.transcript)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }

    let verdicts = intrusim::check_expectations(&output, &scenario.expectations);
    if !args.quiet {
        for verdict in &verdicts {
            let status = if verdict.pass { "PASS" } else { "FAIL" };
            println!("{status} {} — {}", verdict.expectation, verdict.message);
        }
        let passed = verdicts.iter().filter(|v| v.pass).count();
        println!(
            "{passed}/{} expectations passed; {} transcript records over {horizon} ms",
            verdicts.len(),
            output.transcript.len()
        );
    }
    Ok(harness::all_pass(&verdicts))
}
