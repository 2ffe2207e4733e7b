use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use sigmavol::econo::GarchParams;
use sigmavol::harness::{
    evaluate, fit_model, rolling_forecast, run_experiment, write_outputs, Alignment, Dataset,
    ExperimentConfig, ModelKind, SavedModel, ScalerConfig, TrainConfig,
};
use sigmavol::rvpipe::{daily_realized_vol, load_prices, TimestampFormat};
use sigmavol::simgen::{derive_seed, simulate_garch11, simulate_rv_from_path};
use sigmavol::{Error, ErrorClass, Result, RvSeries};

/// Volatility forecasting with GARCH, HAR, LSTM and σ-LSTM models.
#[derive(Parser)]
#[command(name = "sigmavol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build daily realized volatility from intraday prices.
    Rv(RvArgs),
    /// Simulate a GARCH(1,1) path and a synthetic RV series.
    Simulate(SimulateArgs),
    /// Fit a model on a whole RV series and save it.
    Fit(FitArgs),
    /// Rolling one-step-ahead forecasts from a saved model.
    Forecast(ForecastArgs),
    /// Run an experiment config with a hyperparameter grid.
    Grid(RunArgs),
    /// Run a full experiment from a config file.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TsFormat {
    Auto,
    Epoch,
    Iso,
}

impl From<TsFormat> for TimestampFormat {
    fn from(f: TsFormat) -> Self {
        match f {
            TsFormat::Auto => TimestampFormat::Auto,
            TsFormat::Epoch => TimestampFormat::EpochSeconds,
            TsFormat::Iso => TimestampFormat::Iso8601,
        }
    }
}

#[derive(Args)]
struct RvArgs {
    /// Prices CSV with header `timestamp,price`.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV with header `date,rv,ret`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    timestamp_format: TsFormat,
    /// Days with fewer prices than this are dropped.
    #[arg(long, default_value_t = sigmavol::rvpipe::DEFAULT_MIN_INTRADAY_OBS)]
    min_obs: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = sigmavol::simgen::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Log-normal noise scale of the synthetic RV around the true σ.
    #[arg(long, default_value_t = 0.0)]
    rv_noise: f64,
    /// Path CSV (`t,ret,sigma2`).
    #[arg(long)]
    output: PathBuf,
    /// Optional RV CSV (`date,rv,ret`) for the same path.
    #[arg(long)]
    rv_output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    /// RV CSV with header `date,rv,ret`.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the fitted model.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Score σ̂²_t against the return the cell has just consumed.
    #[arg(long)]
    filtering: bool,
}

#[derive(Args)]
struct ForecastArgs {
    /// Model file written by `fit` or `run`.
    #[arg(long)]
    model: PathBuf,
    /// RV CSV with header `date,rv,ret`.
    #[arg(long)]
    input: PathBuf,
    /// Forecast the final `last` days, each from the data before it. Only
    /// days after the model's fitting sample are genuinely out of sample.
    #[arg(long, default_value_t = 200)]
    last: usize,
    /// Output CSV with header `date,prediction,target`.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn cmd_rv(a: &RvArgs) -> Result<()> {
    let loaded = load_prices(&a.input, a.timestamp_format.into())?;
    if loaded.duplicates > 0 || loaded.out_of_order > 0 {
        warn!(
            "{} duplicate and {} out-of-order timestamps repaired",
            loaded.duplicates, loaded.out_of_order
        );
    }
    let built = daily_realized_vol(&loaded.series, a.min_obs)?;
    if !built.dropped_days.is_empty() {
        warn!("dropped {} sparse days", built.dropped_days.len());
    }
    built.series.write_csv(&a.output)?;
    info!("wrote {} days to {}", built.series.len(), a.output.display());
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let p = GarchParams::garch11(a.omega, a.alpha, a.beta)?;
    let path = simulate_garch11(&p, a.n, a.seed, a.burn_in)?;
    path.write_csv(&a.output)?;
    if let Some(rv_path) = &a.rv_output {
        let rv = simulate_rv_from_path(&path, a.rv_noise, derive_seed(a.seed, 1))?;
        path.to_rv_series(&rv)?.write_csv(rv_path)?;
    }
    Ok(())
}

fn dataset_for(path: &Path, needs_returns: bool) -> Result<Dataset> {
    Dataset::from_rv_series(&RvSeries::read_csv(path)?, needs_returns)
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let defaults = TrainConfig::default();
    let train = TrainConfig {
        hidden: a.hidden.unwrap_or(defaults.hidden),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        window: a.window.unwrap_or(defaults.window),
        alignment: if a.filtering { Alignment::Filtering } else { Alignment::Predictive },
        ..defaults
    };
    let needs_returns = matches!(a.model, ModelKind::Garch11 | ModelKind::SigmaLstm);
    let data = dataset_for(&a.input, needs_returns).map_err(|e| e.at_stage("ingest"))?;
    let fitted = fit_model(a.model, &train, &ScalerConfig::default(), &data, 0..data.len(), a.seed)
        .map_err(|e| e.at_stage("fit"))?;
    if let Some(last) = fitted.history.last() {
        info!("final training loss {last:.6e} after {} epochs", fitted.history.len());
    }
    fitted.model.write(&a.output).map_err(|e| e.at_stage("write"))
}

fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let model = SavedModel::read(&a.model).map_err(|e| e.at_stage("ingest"))?;
    let needs_returns = matches!(model, SavedModel::Garch { .. } | SavedModel::SigmaLstm(_));
    let data = dataset_for(&a.input, needs_returns).map_err(|e| e.at_stage("ingest"))?;
    if a.last == 0 || a.last >= data.len() {
        return Err(Error::Config(format!(
            "--last must be between 1 and {} for this series",
            data.len().saturating_sub(1)
        )));
    }
    let span = data.len() - a.last..data.len();
    let pred = rolling_forecast(model.forecaster(), &data.returns, &data.rv, span.clone(), span.start)
        .map_err(|e| e.at_stage("forecast"))?;
    let metrics = evaluate(&pred, &data.rv[span.clone()])?;
    let mut csv = String::from("date,prediction,target\n");
    for (i, p) in span.zip(&pred) {
        csv.push_str(&format!("{},{:.16e},{:.16e}\n", data.dates[i], p, data.rv[i]));
    }
    std::fs::write(&a.output, csv).map_err(|e| Error::io(&a.output, e).at_stage("write"))?;
    println!("rmse {:.6e} over {} days", metrics.rmse, metrics.n);
    Ok(())
}

fn cmd_run(a: &RunArgs, require_grid: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| e.at_stage("config"))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &a.output_dir {
        cfg.output.dir = dir.clone();
    }
    if require_grid && cfg.grid.is_none() {
        return Err(Error::Config("config has no [grid] section".into()).at_stage("config"));
    }
    let outcome = run_experiment(&cfg)?;
    let files = write_outputs(&outcome, &cfg.output.dir).map_err(|e| e.at_stage("write"))?;
    if let Some(board) = &outcome.leaderboard {
        for e in board {
            match (e.rmse, &e.error) {
                (Some(r), _) => println!("grid #{:<3} val rmse {r:.6e}", e.index),
                (None, err) => println!("grid #{:<3} failed: {}", e.index, err.as_deref().unwrap_or("?")),
            }
        }
    }
    println!(
        "{} test rmse {:.6e} over {} days; report at {}",
        outcome.report.model,
        outcome.report.metrics.rmse,
        outcome.report.metrics.n,
        files.report.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rv(a) => cmd_rv(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Grid(a) => cmd_run(a, true),
        Command::Run(a) => cmd_run(a, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
