//! Command-line front end: `wlan-lba run <scenario-file>`.
//!
//! Exit codes: 0 on success, 1 for scenario errors (including an unreadable
//! scenario file), 2 for runtime and output errors.

mod report;

pub use report::{
    write_moves, write_reports, write_summary, write_trace, RunOutcome, MOVES_HEADER,
    SUMMARY_HEADER, TRACE_HEADER,
};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::scenario::{parse_scenario_with, ModeSetting, ScenarioError};
use crate::sim::{self, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENARIO: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wlan-lba", version, about = "WLAN load-balancing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file and write CSV reports.
    Run(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Scenario file.
    pub scenario: PathBuf,
    /// Controller mode, overriding the file.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<ModeSetting>,
    /// Load tolerance around the average network load.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `dotted.key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Vec<Sweep>,
    /// Skip writing trace.csv.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

fn parse_mode(s: &str) -> Result<ModeSetting, String> {
    s.parse()
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (key, values) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=v1,v2,... got `{s}`"))?;
    let key = key.trim();
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_owned()).collect();
    if key.is_empty() || values.iter().any(String::is_empty) {
        return Err(format!("empty key or value in `{s}`"));
    }
    Ok(Sweep {
        key: key.to_owned(),
        values,
    })
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadScenario {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("{label}: {source}")]
    Sim { label: String, source: SimError },
    #[error("writing reports: {0}")]
    Output(#[from] std::io::Error),
    #[error("writing reports: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadScenario { .. } | CliError::Scenario(_) => EXIT_SCENARIO,
            CliError::Sim {
                source: SimError::InvalidScenario(_),
                ..
            } => EXIT_SCENARIO,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Every combination of sweep values, first sweep varying slowest.
pub fn sweep_points(sweeps: &[Sweep]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for sw in sweeps {
        points = points
            .into_iter()
            .flat_map(|p| {
                sw.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((sw.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn flag_overrides(args: &RunArgs) -> Vec<(String, String)> {
    let mut o = Vec::new();
    if let Some(m) = args.mode {
        o.push(("sim.lba_mode".to_owned(), m.to_string()));
    }
    if let Some(a) = args.alpha {
        o.push(("sim.alpha".to_owned(), a.to_string()));
    }
    if let Some(s) = args.seed {
        o.push(("sim.seed".to_owned(), s.to_string()));
    }
    o
}

/// Parses and runs every sweep point. Warnings go to `warn`.
pub fn execute(
    text: &str,
    args: &RunArgs,
    warn: &mut dyn FnMut(String),
) -> Result<Vec<RunOutcome>, CliError> {
    let base = flag_overrides(args);
    let mut jobs = Vec::new();
    for point in sweep_points(&args.sweep) {
        let overrides: Vec<(String, String)> =
            base.iter().cloned().chain(point.iter().cloned()).collect();
        let parsed = parse_scenario_with(text, &overrides)?;
        if jobs.is_empty() {
            for w in &parsed.warnings {
                warn(format!("warning: {w}"));
            }
        }
        let name = parsed.scenario.display_name().to_owned();
        let label = if point.is_empty() {
            name
        } else {
            let tags: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{name}[{}]", tags.join(";"))
        };
        jobs.push((label, parsed.scenario));
    }
    jobs.into_par_iter()
        .map(|(label, scenario)| match sim::run(&scenario) {
            Ok(report) => Ok(RunOutcome {
                label,
                scenario,
                report,
            }),
            Err(source) => Err(CliError::Sim { label, source }),
        })
        .collect()
}

fn run(args: &RunArgs, warn: &mut dyn FnMut(String)) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(&args.scenario).map_err(|source| CliError::ReadScenario {
            path: args.scenario.clone(),
            source,
        })?;
    let runs = execute(&text, args, warn)?;
    write_reports(&runs, &args.out, !args.no_trace)?;
    Ok(())
}

/// Parses `argv` (including the program name), runs, and returns the exit
/// code. Errors and warnings are printed to stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_SCENARIO
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let Command::Run(args) = cli.command;
    match run(&args, &mut |w| eprintln!("{w}")) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
