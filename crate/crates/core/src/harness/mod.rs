//! Experiment harness: training loops, rolling one-step-ahead forecasts,
//! metrics, grid search and config-driven runs.
//!
//! A run goes ingest → daily RV → chronological split → fit on the training
//! segment → forecast each test day from the data strictly before it. Every
//! random draw is derived from the config seed, so a config fully determines
//! `report.json` and `forecasts.csv`.

mod config;
mod experiment;
mod forecast;
mod grid;
mod model_file;
mod optim;
mod train;

pub use config::{
    Alignment, DataConfig, ExperimentConfig, GridConfig, ModelKind, OutputConfig, ScalerConfig,
    TrainConfig,
};
pub use experiment::{
    fit_model, load_dataset, report_json, run_experiment, run_experiment_file, write_outputs,
    Dataset, ExperimentOutcome, Fitted, OutputFiles,
};
pub use forecast::{
    evaluate, rolling_forecast, ForecastReport, Forecaster, GarchForecaster, HarForecaster,
    History, Metrics, SigmaLstmForecaster, VanillaLstmForecaster,
};
pub use grid::{grid_search, GridEntry, GridOutcome};
pub use model_file::SavedModel;
pub use optim::{clip_grad_norm, Adam, CLIP_NORM};
pub use train::{train_sigma_lstm, train_vanilla_lstm, SigmaTraining, VanillaTraining};
