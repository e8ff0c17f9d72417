use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ou_evolution_cli::config::{field_names, FieldSpec};
use ou_evolution_cli::{registry, CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(
    name = "ouev",
    version,
    about = "Verification suites for time-periodic Ornstein–Uhlenbeck evolution systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite (or `all`) and write report.json plus one CSV per curve.
    Run(RunArgs),
    /// List the registered suites with the statements they verify.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Suite name from `ouev list`, or `all`.
    #[arg(long)]
    experiment: Option<String>,
    /// Builtin field name; overrides the [field] section of the config.
    #[arg(long)]
    field: Option<String>,
    /// TOML (or .json) configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Factor applied to the solver tolerances ode_tol and entrance_tol.
    #[arg(long)]
    tol_scale: Option<f64>,
}

fn run(args: RunArgs) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = args.experiment {
        cfg.experiment = Some(e);
    }
    if let Some(f) = args.field {
        if !field_names().contains(&f.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown field '{f}'; expected one of {}",
                field_names().join(", ")
            )));
        }
        cfg.field = Some(FieldSpec::from_builtin(&f));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(dir) = args.out_dir {
        cfg.out_dir = Some(dir);
    }
    if let Some(scale) = args.tol_scale {
        cfg.scale_tolerances(scale)?;
    }
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let report = ou_evolution_cli::run(&cfg)?;
    let written = report.write(&out_dir)?;
    for s in &report.suites {
        println!("{:<14} {:?}", s.name, s.status());
    }
    println!("report: {}", written[0].display());
    let failures = report.failures();
    for f in &failures {
        eprintln!("FAILED {f}");
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List => {
            print!("{}", registry::listing());
            Ok(true)
        }
        Command::Run(args) => run(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
