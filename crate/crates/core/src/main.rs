use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use covshift::harness::{self, ExperimentConfig, ExperimentKind, OutputFormat};
use covshift::Result;

/// Run a covariate-shift experiment described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "covshift", version)]
struct Cli {
    /// Experiment kind; overrides `kind` in the config.
    kind: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file. CSV output also writes `<out>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Exit with status 1 when the summary does not pass.
    #[arg(long)]
    strict: bool,
}

fn execute(cli: &Cli) -> Result<bool> {
    let text = fs::read_to_string(&cli.config)?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    cfg.kind = Some(cli.kind);
    if cli.seed.is_some() {
        cfg.master_seed = cli.seed;
    }
    if cli.trials.is_some() {
        cfg.trials = cli.trials;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    let spec = cfg.output.clone().unwrap_or_default();
    let out = cli.out.clone().or(spec.path.map(PathBuf::from));
    let format = cli.format.or(spec.format).unwrap_or_default();

    let result = harness::run(&cfg)?;
    match (format, &out) {
        (OutputFormat::Csv, Some(path)) => {
            harness::write_csv(&result.rows, fs::File::create(path)?)?;
            let mut summary_path = path.clone().into_os_string();
            summary_path.push(".summary.json");
            fs::write(summary_path, harness::summary_json(&result.summary)? + "\n")?;
        }
        (OutputFormat::Csv, None) => {
            harness::write_csv(&result.rows, io::stdout().lock())?;
            eprintln!("{}", harness::summary_json(&result.summary)?);
        }
        (OutputFormat::Json, Some(path)) => {
            fs::write(path, harness::output_json(&result)? + "\n")?;
        }
        (OutputFormat::Json, None) => {
            writeln!(io::stdout().lock(), "{}", harness::output_json(&result)?)?;
        }
    }
    eprintln!(
        "{}: {}/{} successes, threshold {:.4}, {}",
        result.summary.kind,
        result.summary.successes,
        result.summary.trials,
        result.summary.threshold,
        if result.summary.passed {
            "PASS"
        } else {
            "FAIL"
        }
    );
    Ok(result.summary.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.strict => ExitCode::from(1),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
