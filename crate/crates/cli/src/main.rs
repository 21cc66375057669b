use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use appslice::scenario::{self, Scenario, ScenarioError, SweepAxis, SweepError, SweepPoint};
use clap::{Parser, Subcommand};

/// Run app slice scenarios on a simulated device/edge/cloud fabric.
#[derive(Debug, Parser)]
#[command(name = "appslice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write report.json, metrics.csv and adjustments.jsonl.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Deploy without slices.
        #[arg(long)]
        best_effort: bool,
        /// Keep the initial grants for the whole run.
        #[arg(long)]
        no_dynamic: bool,
    },
    /// Run a base scenario once per point of a service sweep.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Mbps (net), cores (cpu) or mbps:cores (joint); comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
        #[arg(long)]
        base: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
}

const EXIT_INVALID: u8 = 2;
const EXIT_ALLOCATION: u8 = 3;

fn report_error(err: &ScenarioError) -> ExitCode {
    match err {
        ScenarioError::Io { .. } => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_INVALID)
        }
        ScenarioError::Invalid(diagnostics) => {
            for d in diagnostics {
                eprintln!("{d}");
            }
            ExitCode::from(EXIT_INVALID)
        }
        ScenarioError::Allocation(report) => {
            eprintln!("{}", report.to_json());
            ExitCode::from(EXIT_ALLOCATION)
        }
        ScenarioError::Run(inner) => {
            eprintln!("error: {inner}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(path: &Path, out: &Path, best_effort: bool, no_dynamic: bool) -> ExitCode {
    let scenario = match Scenario::load(path) {
        Ok(s) => s.with_flags(best_effort, no_dynamic),
        Err(err) => return report_error(&err),
    };
    let report = match scenario::run(&scenario) {
        Ok(r) => r,
        Err(err) => return report_error(&err),
    };
    if let Err(err) = report.write_to(out) {
        eprintln!("error: cannot write to {}: {err}", out.display());
        return ExitCode::FAILURE;
    }
    println!("{}: {} alerts", report.scenario, report.alerts);
    ExitCode::SUCCESS
}

fn cmd_sweep(axis: SweepAxis, values: &[String], base: &Path, out: Option<&Path>) -> ExitCode {
    let points: Result<Vec<SweepPoint>, String> =
        values.iter().map(|v| SweepPoint::parse(axis, v)).collect();
    let points = match points {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let base = match Scenario::load(base) {
        Ok(s) => s,
        Err(err) => return report_error(&err),
    };
    let rows = match scenario::sweep(&base, &points) {
        Ok(rows) => rows,
        Err(SweepError::Scenario(err)) => return report_error(&err),
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let csv = scenario::sweep_csv(&rows);
    match out {
        Some(path) => {
            if let Err(err) = fs::write(path, csv) {
                eprintln!("error: cannot write {}: {err}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn cmd_validate(path: &Path) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", path.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match Scenario::parse_with_warnings(&text) {
        Ok((s, warnings)) => {
            for w in &warnings {
                eprintln!("{w}");
            }
            println!("{}: ok", s.name);
            ExitCode::SUCCESS
        }
        Err(err) => report_error(&err),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run {
            scenario,
            out,
            best_effort,
            no_dynamic,
        } => cmd_run(scenario, out, *best_effort, *no_dynamic),
        Command::Sweep {
            axis,
            values,
            base,
            out,
        } => cmd_sweep(*axis, values, base, out.as_deref()),
        Command::Validate { scenario } => cmd_validate(scenario),
    }
}
