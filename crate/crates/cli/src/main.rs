//! `g2flow`: command-line driver for the isometric flow laboratory.

mod manifest;
mod sink;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use g2flow::bryant::IsometricState;
use g2flow::diagnostics::record_for;
use g2flow::flow::{rescale_check, run, FlowConfig, FlowState, InitialCondition, RunStatus};
use g2flow::g2algebra::{standard_tables, validate_tables};
use g2flow::grid::{read_checkpoint, GridSpec};
use g2flow::verify::{run_suite, Suite};
use g2flow::Error;

use manifest::{ManifestStatus, RunManifest};
use sink::FileSink;

#[derive(Parser)]
#[command(name = "g2flow", version, about = "Isometric G2-structure flow on the flat 7-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the structure-constant identity report.
    ValidateTables,
    /// Run a flow from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "g2flow-out")]
        out_dir: PathBuf,
    },
    /// Run verification suites and print CSV.
    Verify {
        /// identities, evolution or connection; all suites when omitted.
        #[arg(long)]
        suite: Option<Suite>,
    },
    /// Recompute the diagnostics of a checkpoint.
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Compare a run at period cL with the parabolically rescaled base run.
    RescaleCheck {
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        /// Base configuration; a small multi-mode run when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidState { .. }
            | Error::NotIsometric { .. }
            | Error::GaugeDrift { .. }
            | Error::FrameDegenerate { .. }
            | Error::DegenerateForm { .. }
            | Error::NotSymmetric { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn verification_failed(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ValidateTables => validate(),
        Command::Run { config, out_dir } => run_config(&config, &out_dir),
        Command::Verify { suite } => verify(suite),
        Command::Diagnose { checkpoint } => diagnose(&checkpoint),
        Command::RescaleCheck { c, config } => rescale(c, config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("g2flow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn validate() -> Result<(), Failure> {
    let report = validate_tables(standard_tables());
    print!("{report}");
    if report.all_zero() {
        Ok(())
    } else {
        Err(verification_failed("structure tables fail identities"))
    }
}

fn load_config(path: &Path) -> Result<(String, FlowConfig), Failure> {
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let config = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    Ok((text, config))
}

fn run_config(path: &Path, out_dir: &Path) -> Result<(), Failure> {
    let (text, config) = load_config(path)?;
    fs::create_dir_all(out_dir).map_err(|e| config_error(format!("{}: {e}", out_dir.display())))?;
    let mut manifest = RunManifest::begin(out_dir, &text, config.grid.clone(), config.initial.clone())
        .map_err(|e| config_error(e.to_string()))?;
    let mut sink = FileSink::create(out_dir)?;
    let result = run(&config, &mut sink);
    sink.flush()?;
    manifest.events = sink.events.clone();
    let (status, outcome) = match result {
        Ok(outcome) => {
            manifest.steps = Some(outcome.steps);
            manifest.final_t = Some(outcome.t);
            manifest.events = outcome.events.clone();
            match outcome.status {
                RunStatus::Completed => (ManifestStatus::Completed, Ok(())),
                RunStatus::SingularitySuspected { last_valid_t } => (
                    ManifestStatus::SingularitySuspected,
                    Err(Failure {
                        code: 2,
                        message: format!("singularity suspected after t = {last_valid_t}"),
                    }),
                ),
            }
        }
        Err(e) => (ManifestStatus::Failed, Err(Failure::from(e))),
    };
    let error = outcome.as_ref().err().map(|f| f.message.clone());
    manifest.finish(status, error).map_err(|e| config_error(e.to_string()))?;
    outcome
}

fn verify(suite: Option<Suite>) -> Result<(), Failure> {
    let suites = match suite {
        Some(s) => vec![s],
        None => vec![Suite::Identities, Suite::Evolution, Suite::Connection],
    };
    let mut failed = Vec::new();
    for s in suites {
        let report = run_suite(s)?;
        print!("{}", report.to_csv());
        if !report.passed() {
            failed.push(format!("{s:?}").to_lowercase());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(verification_failed(format!("failed suites: {}", failed.join(", "))))
    }
}

fn diagnose(path: &Path) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let cp = read_checkpoint(BufReader::new(file))?;
    let state = IsometricState::new(cp.f, cp.x);
    let defect = state.constraint_defect();
    let state = FlowState::Fx(state);
    let sup_t0 = g2flow::diagnostics::sup_torsion(&state.torsion());
    let record = record_for(&state, 0.0, defect, &Default::default(), sup_t0)?;
    let line = serde_json::to_string(&record).map_err(|e| config_error(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn default_rescale_config() -> FlowConfig {
    let n = 16;
    let h = 1.0 / n as f64;
    FlowConfig::new(
        GridSpec {
            period: 1.0,
            points_per_dim: n,
            active_dims: vec![0, 1],
            stencil_order: 2,
        },
        InitialCondition::MultiMode {
            amplitude: 0.1,
            max_wavenumber: 1,
            seed: 1,
            components: None,
        },
        0.05 * h * h,
        40.0 * 0.05 * h * h,
    )
}

fn rescale(c: f64, path: Option<&Path>) -> Result<(), Failure> {
    let config = match path {
        Some(p) => load_config(p)?.1,
        None => default_rescale_config(),
    };
    let report = rescale_check(&config, c)?;
    println!("c,trajectory_discrepancy,energy_defect,theta_defect,entropy_defect,pass");
    println!(
        "{},{:e},{:e},{:e},{:e},{}",
        report.c,
        report.trajectory_discrepancy,
        report.energy_defect,
        report.theta_defect,
        report.entropy_defect,
        report.passed
    );
    if report.passed {
        Ok(())
    } else {
        Err(verification_failed("rescaled trajectory disagrees"))
    }
}
