//! Command-line front end: `run`, `replay` and `report`.

pub mod config;
pub mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use run::{collect_trace_paths, csv_field, header, replay, report, run, write_report, Failure, RunOutcome};

use crate::analytics::{Metric, TrialReport, WindowKind};
use crate::error::{Error, Result};
use crate::protocol::{Arm, ScenarioId};

#[derive(Debug, Parser)]
#[command(name = "abba", version, about = "Adaptive basal-bolus advisor: in-silico trials and reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a cohort and write traces, checkpoints and the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<ScenarioId>,
        /// Repeat to run several arms.
        #[arg(long, value_parser = parse_arm)]
        arm: Vec<Arm>,
    },
    /// Recompute the report from trace files or directories.
    Replay {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write report.csv and report.svg here instead of printing the CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild report.csv and report.svg of a run directory from its traces.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_scenario(s: &str) -> std::result::Result<ScenarioId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_arm(s: &str) -> std::result::Result<Arm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Headline numbers for the terminal.
pub fn print_summary(out: &mut impl Write, report: &TrialReport) -> std::io::Result<()> {
    writeln!(out, "{} {} n={}", report.diabetes_type, report.scenario, report.patients.len())?;
    for metric in [Metric::Tir, Metric::Tbr1, Metric::Tar, Metric::HypoEvents, Metric::Rescues] {
        write!(out, "  {:<14}", metric.name())?;
        for a in &report.arms {
            if let Some(d) = report.describe(a.arm, WindowKind::Full, metric) {
                write!(out, " {} {:>7.2} ({:.2})", a.arm, d.mean, d.sd)?;
            }
        }
        if let Some(c) = report.comparison(WindowKind::Full, metric) {
            write!(out, "  {} p={:.4}", c.test, c.p_value)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Run { config, seed, out, jobs, scenario, arm } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = RunConfig::parse(&text, &Overrides { seed, out, jobs, scenario, arms: arm })?;
            let outcome = run(&cfg)?;
            if let Some(r) = &outcome.report {
                print_summary(&mut stdout.lock(), r)?;
            }
            for f in &outcome.failures {
                eprintln!("failed: patient {} {}: {}", f.patient, f.arm, f.message);
            }
            Ok(outcome.failures.is_empty())
        }
        Command::Replay { traces, out } => {
            let (rep, head) = replay(&collect_trace_paths(&traces)?)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    write_report(&dir, &head, &rep)?;
                    print_summary(&mut stdout.lock(), &rep)?;
                }
                None => crate::analytics::write_report_csv(&mut stdout.lock(), &head, &rep)?,
            }
            Ok(true)
        }
        Command::Report { out } => {
            let rep = report(&out)?;
            print_summary(&mut stdout.lock(), &rep)?;
            Ok(true)
        }
    }
}

/// Exit status 0 when everything requested finished, 1 when some patients
/// failed, 2 on errors that stop the command.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
