use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use turntrack::pipeline::{self, PipelineError, RunConfig, Source, PREDICTION_FILE, TRACK_FILE};

/// Coordinated-turn target tracking and trajectory prediction.
#[derive(Parser, Debug)]
#[command(name = "turntrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario, track it, and write track/prediction/metrics files.
    Simulate(CommonArgs),
    /// Replay a measurement file through the filter and write the filtered track.
    Filter(CommonArgs),
    /// Replay a measurement file and write the issued predictions.
    Predict(CommonArgs),
    /// Compute metrics from previously written track and prediction files.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Measurement CSV to replay (overrides the config's `input`).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory holding track.csv and predictions.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Track file (defaults to <out>/track.csv).
    #[arg(long)]
    track: Option<PathBuf>,
    /// Prediction file (defaults to <out>/predictions.csv when present).
    #[arg(long)]
    predictions: Option<PathBuf>,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(input) = &args.input {
        cfg.input = Some(input.clone());
        cfg.scenario = None;
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn out_dir(args: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn require_file_input(cfg: &RunConfig) -> Result<(), PipelineError> {
    match cfg.source()? {
        Source::File(_) => Ok(()),
        Source::Scenario(_) => Err(PipelineError::Config(
            "this command replays a measurement file; pass --input or set \"input\" in the config"
                .into(),
        )),
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let dir = out_dir(&args, &cfg);
            let run = pipeline::run_scenario(&cfg)?;
            print_written(&pipeline::write_all(&dir, &run, &cfg)?);
            print!("{}", run.metrics);
        }
        Command::Filter(args) => {
            let cfg = load_config(&args)?;
            require_file_input(&cfg)?;
            let dir = out_dir(&args, &cfg);
            let run = pipeline::run_scenario(&cfg)?;
            print_written(&[pipeline::write_track(&dir, &run)?]);
            print!("{}", run.metrics);
        }
        Command::Predict(args) => {
            let cfg = load_config(&args)?;
            require_file_input(&cfg)?;
            let dir = out_dir(&args, &cfg);
            let run = pipeline::run_scenario(&cfg)?;
            print_written(&[pipeline::write_predictions(&dir, &run)?]);
            println!("predictions issued  {}", run.predictions.len());
        }
        Command::Report(args) => {
            let dir = args.out.unwrap_or_else(|| PathBuf::from("out"));
            let track = args.track.unwrap_or_else(|| dir.join(TRACK_FILE));
            let predictions = args.predictions.or_else(|| {
                let p = dir.join(PREDICTION_FILE);
                Path::exists(&p).then_some(p)
            });
            let metrics = pipeline::report_from_files(&track, predictions.as_deref())?;
            print!("{metrics}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
