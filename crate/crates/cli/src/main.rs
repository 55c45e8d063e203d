//! `hypconj` binary: one subcommand per task, a JSON config in, a
//! deterministic `report.json` (plus per-task CSVs) out.
//!
//! Exit codes: 0 all checks pass, 1 any check fails, 2 any task error,
//! 3 config rejection.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypconj_cli::config::{self, TaskKind};
use hypconj_cli::report::{table_csv, RunReport, Value};
use hypconj_cli::tasks;

#[derive(Parser)]
#[command(
    name = "hypconj",
    version,
    about = "Hyperbolic linearization toolkit: hypothesis verification and conjugacy construction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify map hypotheses: constants, cone condition, covering relations
    VerifyMap(CommonArgs),
    /// Construct the conjugacy on a point batch and report defects
    Conjugate(CommonArgs),
    /// Hölder exponent estimates and their empirical checks
    Holder(CommonArgs),
    /// Verify flow hypotheses: constants and isolating-segment conditions
    VerifyOde(CommonArgs),
    /// Construct the flow conjugacy on a point batch
    ConjugateOde(CommonArgs),
    /// Globalize a local quadratic perturbation and emit the resulting config
    Localize(CommonArgs),
    /// Locate a periodic point from a closed loop of boxes
    Periodic(CommonArgs),
}

impl Command {
    fn split(&self) -> (TaskKind, &CommonArgs) {
        match self {
            Command::VerifyMap(a) => (TaskKind::VerifyMap, a),
            Command::Conjugate(a) => (TaskKind::Conjugate, a),
            Command::Holder(a) => (TaskKind::Holder, a),
            Command::VerifyOde(a) => (TaskKind::VerifyOde, a),
            Command::ConjugateOde(a) => (TaskKind::ConjugateOde, a),
            Command::Localize(a) => (TaskKind::Localize, a),
            Command::Periodic(a) => (TaskKind::Periodic, a),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run config
    #[arg(long)]
    config: PathBuf,

    /// Override the config's sampling seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for report.json and per-task artifacts
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Point-batch artifact format: csv also writes per-task CSV files,
    /// json keeps batches inside report.json only
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = cli.command.split();

    let mut cfg = match config::parse_config_file(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(3);
        }
    };
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Err(e) = cfg.set_tasks(vec![task]) {
        eprintln!("config error: {e:#}");
        return ExitCode::from(3);
    }

    let (report, timings) = tasks::execute(&cfg);
    // wall-clock goes to stdout only; the report stays deterministic
    for (task_report, secs) in report.tasks.iter().zip(&timings) {
        println!("task {}: {} ({secs:.3}s)", task_report.task.name(), task_report.outcome.label());
    }
    println!("overall: {}", report.overall().label());

    if let Err(e) = write_outputs(&report, args) {
        eprintln!("output error: {e:#}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn write_outputs(report: &RunReport, args: &CommonArgs) -> anyhow::Result<()> {
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("report.json"), report.to_json())?;
    for task_report in &report.tasks {
        for (key, value) in &task_report.payload {
            match value {
                Value::Table(table) if matches!(args.format, Format::Csv) => {
                    let name = if key == "batch" {
                        format!("{}.csv", task_report.task.name())
                    } else {
                        format!("{}-{key}.csv", task_report.task.name())
                    };
                    fs::write(args.out.join(name), table_csv(table))?;
                }
                // the localize task's emission is a config artifact, written
                // regardless of batch format
                Value::Str(text) if key == "emitted_config" => {
                    fs::write(args.out.join("localized.json"), text)?;
                }
                _ => {}
            }
        }
    }
    Ok(())
}
