//! Command-line front end. Exit codes: 0 when every asserted property holds,
//! 1 on a property failure (JSON records on stderr), 2 on usage or config errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{
    evaluate_convergence_sweep, evaluate_decomposition_demo, evaluate_uniform_bound_check, run_robustness_probe,
    ErrorReport, ExperimentConfig,
};
use crate::error::{Error, Result};
use crate::predictor::{synthesize_time_predictor, PredictorTransfer, TimeGrid};
use crate::signals::fmt;

#[derive(Parser)]
#[command(name = "causal-predict", version, about = "Causal predictors for anticausal rational kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write an error-vs-gamma plot here.
    #[arg(long)]
    emit_svg: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config without running anything.
    Validate(Common),
    /// Sample the causal predictor kernel for each ladder gamma.
    Synth(Common),
    /// Error against gamma for each signal; must decrease strictly.
    Sweep(Common),
    /// Uniform sup-error bound for mixed spectra.
    BoundCheck(Common),
    /// Sweep with out-of-band noise; detects the error minimum and regrowth.
    Robustness(Common),
    /// Predict low and high parts separately and recombine.
    Decompose(Common),
}

enum Failure {
    Usage(Error),
    Property(Vec<Error>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Property(vec![e])
    }
}

fn record(stderr: &mut dyn Write, e: &Error) {
    let _ = writeln!(stderr, "{}", e.record());
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
            };
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            record(stderr, &e);
            2
        }
        Err(Failure::Property(errs)) => {
            for e in &errs {
                record(stderr, e);
            }
            1
        }
    }
}

fn load(common: &Common) -> std::result::Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(&common.config).map_err(Failure::Usage)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate().map_err(Failure::Usage)?;
    Ok(config)
}

fn run(command: Command, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (common, which) = match &command {
        Command::Validate(c) => (c.clone(), "validate"),
        Command::Synth(c) => (c.clone(), "synth"),
        Command::Sweep(c) => (c.clone(), "sweep"),
        Command::BoundCheck(c) => (c.clone(), "bound-check"),
        Command::Robustness(c) => (c.clone(), "robustness"),
        Command::Decompose(c) => (c.clone(), "decompose"),
    };
    let config = load(&common)?;
    match which {
        "validate" => {
            let kernel = config.validate().map_err(Failure::Usage)?;
            let grid = config.time_grid(&kernel).map_err(Failure::Usage)?;
            let signals = config.resolve_signals(&grid).map_err(Failure::Usage)?;
            let summary = serde_json::json!({
                "valid": true,
                "signals": signals.iter().map(|s| s.id().to_string()).collect::<Vec<_>>(),
                "grid": grid,
                "gamma_ladder": config.gamma_ladder,
            });
            writeln!(stdout, "{summary}").map_err(|e| Failure::Usage(e.into()))?;
            Ok(())
        }
        "synth" => synth(&config, &common, stdout),
        _ => {
            let report = match which {
                "sweep" => evaluate_convergence_sweep(&config)?,
                "bound-check" => evaluate_uniform_bound_check(&config)?,
                "robustness" => run_robustness_probe(&config)?,
                _ => evaluate_decomposition_demo(&config)?,
            };
            emit(&report, &config, &common, stdout)?;
            if report.passed() {
                Ok(())
            } else {
                let mut errs = report.violations.clone();
                if errs.is_empty() {
                    errs.push(Error::InvalidInput("a report row failed its check".into()));
                }
                Err(Failure::Property(errs))
            }
        }
    }
}

fn emit(report: &ErrorReport, config: &ExperimentConfig, common: &Common, stdout: &mut dyn Write) -> Result<()> {
    let csv_path = common.csv.clone().or_else(|| config.output.csv.clone());
    match &csv_path {
        Some(p) => report.write_csv(std::fs::File::create(p)?)?,
        None => report.write_csv(&mut *stdout)?,
    }
    let json = serde_json::to_string_pretty(&report.to_json())?;
    match common.report.clone().or_else(|| config.output.report.clone()) {
        Some(p) => std::fs::write(p, json + "\n")?,
        None if csv_path.is_some() => writeln!(stdout, "{json}")?,
        None => {}
    }
    if let Some(p) = common.emit_svg.clone().or_else(|| config.output.svg.clone()) {
        report.write_svg(&p, &report.experiment)?;
    }
    Ok(())
}

fn synth(config: &ExperimentConfig, common: &Common, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let kernel = config.validate().map_err(Failure::Usage)?;
    let span = config.grid.span.unwrap_or(400.0 / kernel.min_decay_rate());
    let grid = TimeGrid::centered(span, config.grid.len.unwrap_or(1 << 14));
    let mut columns = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut failures = Vec::new();
    for &g in &config.gamma_ladder {
        let pred = PredictorTransfer::new(kernel.clone(), g)?;
        let k = synthesize_time_predictor(&pred, &grid)?;
        if k.leakage > 1e-3 {
            failures.push(Error::InvalidInput(format!(
                "synthesized kernel at gamma {g} leaks {:e} of its energy to t < 0",
                k.leakage
            )));
        }
        summary.insert(
            fmt(g),
            serde_json::json!({ "leakage": k.leakage, "jump": k.jump }),
        );
        columns.push((g, k.values));
    }
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(columns.iter().map(|(g, _)| format!("khat_{}", fmt(*g))));
        out.write_record(&header)?;
        for j in 0..grid.len {
            let mut row = vec![fmt(grid.time(j))];
            row.extend(columns.iter().map(|(_, v)| fmt(v[j])));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    };
    let csv_path = common.csv.clone().or_else(|| config.output.csv.clone());
    match &csv_path {
        Some(p) => write(&mut std::fs::File::create(p).map_err(Error::from)?)?,
        None => write(stdout)?,
    }
    let json = serde_json::to_string_pretty(&serde_json::json!({ "experiment": "synth", "grid": grid, "gammas": summary }))
        .map_err(Error::from)?;
    match common.report.clone().or_else(|| config.output.report.clone()) {
        Some(p) => std::fs::write(p, json + "\n").map_err(Error::from)?,
        None if csv_path.is_some() => writeln!(stdout, "{json}").map_err(Error::from)?,
        None => {}
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(failures))
    }
}
