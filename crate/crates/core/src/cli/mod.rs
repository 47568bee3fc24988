//! Scenario runner: TOML config in, CSV series and a JSON report out.

pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::ScenarioConfig;
use run::{execute, Mode, Overrides, RunError};

/// Exit codes of the binary.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geophase", version, about = "Cyclic dynamical and geometric phases from dynamical invariants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every task listed in the config.
    Run(RunArgs),
    /// Run only the parameter sweep.
    Sweep(RunArgs),
    /// Check the config without computing.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
    /// Directory for the CSV, report and timing files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also print the report to standard output.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    /// Time steps per run.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Fock-space truncation `N`.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides { steps: self.steps, truncation: self.truncation, tol: self.tol }
    }
}

fn load(path: &Path, o: &OverrideArgs) -> Result<ScenarioConfig, RunError> {
    let mut cfg = ScenarioConfig::load(path)?;
    o.overrides().apply(&mut cfg)?;
    Ok(cfg)
}

fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Compute { .. } | RunError::Io { .. } => EXIT_COMPUTE,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (args, mode) = match cli.command {
        Command::Validate(v) => {
            return match load(&v.config, &v.overrides) {
                Ok(cfg) => {
                    if v.json {
                        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                    } else {
                        println!("config ok: {} task(s)", cfg.tasks.len());
                    }
                    EXIT_PASS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            };
        }
        Command::Run(a) => (a, Mode::Run),
        Command::Sweep(a) => (a, Mode::Sweep),
    };
    let result = load(&args.config, &args.overrides).and_then(|cfg| {
        let out = execute(&cfg, mode)?;
        out.write(&args.out_dir, &cfg.output.report_path)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            if args.json {
                print!("{}", out.report.to_json());
            }
            for c in out.report.checks.iter().filter(|c| c.status == report::Status::Fail) {
                eprintln!("check failed: {} (error {:e}, tolerance {:e})", c.name, c.error, c.tolerance);
            }
            if out.report.all_pass {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
