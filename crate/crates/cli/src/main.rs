//! Command-line driver: parse scenario files, run protocols, campaigns and
//! classifications with seeded determinism, and emit JSON reports plus a
//! human summary.
//!
//! Exit codes: 0 when a verdict was computed (whatever it is), 2 on
//! validation errors, 3 on numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use medwit::scenario::{
    deterministic_section, execute, exit_code_for, human_summary, parse_scenario,
    report_to_json, CampaignSpec, ReportFile, ScenarioFile,
};
use medwit::{Error, Result};

#[derive(Parser)]
#[command(
    name = "medwit",
    version,
    about = "Mediated-entanglement witness toolkit"
)]
struct Cli {
    /// Suppress the human summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (protocol, campaign, variables or demo payload).
    Run {
        scenario: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named demo: cnot-relay, bmv-phase or nonlocal-cz.
    Demo {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sampling campaign over a protocol family.
    Sweep {
        /// classical_local or quantum_local.
        #[arg(long)]
        family: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Stages per sampled protocol.
        #[arg(long, default_value_t = medwit::scenario::DEFAULT_CAMPAIGN_STEPS)]
        steps: usize,
        /// Per-sample negativity threshold.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify declared variables from a scenario file.
    Classify {
        variables: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_family(name: &str) -> Result<medwit::mediators::MediatorKind> {
    match name {
        "classical_local" => Ok(medwit::mediators::MediatorKind::ClassicalLocal),
        "quantum_local" => Ok(medwit::mediators::MediatorKind::QuantumLocal),
        "nonlocal_direct" => Ok(medwit::mediators::MediatorKind::NonlocalDirect),
        other => Err(Error::scenario(
            "/campaign/family",
            format!("unknown family `{other}`"),
        )),
    }
}

fn load_scenario(path: &PathBuf) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

fn emit(report: &ReportFile, out: Option<&PathBuf>, quiet: bool) -> Result<()> {
    let json = report_to_json(report)?;
    // exercised here so reports always carry a parseable deterministic section
    deterministic_section(&json)?;
    match out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    if !quiet {
        eprint!("{}", human_summary(report));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let workers = cli
        .workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    match &cli.command {
        Command::Run { scenario, out } => {
            let scenario = load_scenario(scenario)?;
            let report = execute(&scenario, workers)?;
            emit(&report, out.as_ref(), cli.quiet)
        }
        Command::Demo { name, out } => {
            let scenario = ScenarioFile::for_demo(name);
            let report = execute(&scenario, workers)?;
            emit(&report, out.as_ref(), cli.quiet)
        }
        Command::Sweep {
            family,
            samples,
            seed,
            steps,
            tol,
            out,
        } => {
            let scenario = ScenarioFile::for_campaign(CampaignSpec {
                family: parse_family(family)?,
                samples: *samples,
                seed: *seed,
                n_steps: *steps,
                negativity_threshold: *tol,
            });
            let report = execute(&scenario, workers)?;
            emit(&report, out.as_ref(), cli.quiet)
        }
        Command::Classify { variables, out } => {
            let scenario = load_scenario(variables)?;
            if scenario.variables.is_none() {
                return Err(Error::scenario(
                    "/variables",
                    "classify expects a scenario with a `variables` payload",
                ));
            }
            let report = execute(&scenario, workers)?;
            emit(&report, out.as_ref(), cli.quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
