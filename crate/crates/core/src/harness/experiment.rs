use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDate;
use serde_json::json;

use crate::econo::{garch11_fit, har_fit, FittedModel, GarchParams};
use crate::error::{Error, Result};
use crate::rvpipe::{daily_realized_vol, load_prices, split, RvSeries, Scaler, Splits};
use crate::simgen::{derive_seed, simulate_garch11, simulate_rv_from_path};

use super::config::{DataConfig, ExperimentConfig, ModelKind, ScalerConfig, TrainConfig};
use super::forecast::{
    evaluate, rolling_forecast, ForecastReport, GarchForecaster, HarForecaster,
    SigmaLstmForecaster, VanillaLstmForecaster,
};
use super::grid::{grid_search, GridEntry};
use super::model_file::SavedModel;
use super::train::{train_sigma_lstm, train_vanilla_lstm};

/// Aligned daily series used by every model.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    /// Daily realized volatility; the forecast target.
    pub rv: Vec<f64>,
}

impl Dataset {
    /// Models that read returns need a return on every day, so a leading
    /// day without one is dropped. RV-only models keep every day; missing
    /// returns are stored as 0 and never read.
    pub fn from_rv_series(s: &RvSeries, needs_returns: bool) -> Result<Self> {
        let s = if needs_returns { s.with_complete_returns()? } else { s.clone() };
        Ok(Self {
            dates: s.dates().to_vec(),
            returns: s.ret().iter().map(|r| r.unwrap_or(0.0)).collect(),
            rv: s.rv().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.rv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rv.is_empty()
    }
}

fn needs_returns(model: ModelKind) -> bool {
    matches!(model, ModelKind::Garch11 | ModelKind::SigmaLstm)
}

/// Build the daily dataset described by `cfg.data`.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let series = match &cfg.data {
        DataConfig::Simulate { n, omega, alpha, beta, burn_in, rv_noise } => {
            let p = GarchParams::garch11(*omega, *alpha, *beta)?;
            let path = simulate_garch11(&p, *n, cfg.seed, *burn_in)?;
            let rv = simulate_rv_from_path(&path, *rv_noise, derive_seed(cfg.seed, 1))?;
            path.to_rv_series(&rv)?
        }
        DataConfig::Prices { path, timestamp_format, min_intraday_obs } => {
            let loaded = load_prices(path, *timestamp_format)?;
            daily_realized_vol(&loaded.series, *min_intraday_obs)?.series
        }
        DataConfig::Rv { path } => RvSeries::read_csv(path)?,
    };
    Dataset::from_rv_series(&series, needs_returns(cfg.model))
}

/// A fitted model with its training curve (empty for classical models).
#[derive(Clone, Debug)]
pub struct Fitted {
    pub model: SavedModel,
    pub history: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fit `kind` on `data[train]`.
pub fn fit_model(
    kind: ModelKind,
    train_cfg: &TrainConfig,
    scalers: &ScalerConfig,
    data: &Dataset,
    train: Range<usize>,
    seed: u64,
) -> Result<Fitted> {
    let returns = &data.returns[train.clone()];
    let rv = &data.rv[train];
    let model = match kind {
        ModelKind::Garch11 => {
            let mu = mean(returns);
            let demeaned: Vec<f64> = returns.iter().map(|r| r - mu).collect();
            let fit = garch11_fit(&demeaned)?;
            let forecaster = GarchForecaster {
                params: fit.params.clone(),
                mean: mu,
                sigma2_0: fit.sigma2_0,
            };
            SavedModel::Garch { fit: FittedModel::from(&fit), forecaster }
        }
        ModelKind::Har => SavedModel::Har(HarForecaster { params: har_fit(rv)? }),
        ModelKind::SigmaLstm => {
            let scaler = Scaler::fit(returns, scalers.returns)?;
            let trained = train_sigma_lstm(train_cfg, &scaler.apply_all(returns), seed)?;
            return Ok(Fitted {
                model: SavedModel::SigmaLstm(SigmaLstmForecaster {
                    params: trained.params,
                    scaler,
                    window: train_cfg.window,
                    samples: train_cfg.samples,
                    seed,
                }),
                history: trained.history,
            });
        }
        ModelKind::Lstm => {
            let scaler = Scaler::fit(rv, scalers.rv)?;
            let trained = train_vanilla_lstm(train_cfg, &scaler.apply_all(rv), seed)?;
            return Ok(Fitted {
                model: SavedModel::Lstm(VanillaLstmForecaster {
                    params: trained.params,
                    scaler,
                    window: train_cfg.window,
                }),
                history: trained.history,
            });
        }
    };
    Ok(Fitted { model, history: Vec::new() })
}

/// Everything produced by one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ForecastReport,
    pub fitted: Fitted,
    pub splits: Splits,
    /// Training settings of the final model (the grid winner, if searched).
    pub selected: TrainConfig,
    pub selected_seed: u64,
    pub leaderboard: Option<Vec<GridEntry>>,
}

/// Run ingest, split, fit (with optional grid search) and the rolling test
/// forecast. Nothing is written to disk.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let data = load_dataset(cfg).map_err(|e| e.at_stage("ingest"))?;
    let splits = split(data.len(), &cfg.split).map_err(|e| e.at_stage("split"))?;

    let (fitted, selected, selected_seed, leaderboard) = match &cfg.grid {
        Some(grid) => {
            if !cfg.model.is_neural() {
                return Err(Error::Config(format!(
                    "grid search applies to lstm and sigma-lstm, not {}",
                    cfg.model.name()
                ))
                .at_stage("config"));
            }
            let points = grid.points(&cfg.train);
            let outcome = grid_search(&points, |i, point| {
                let seed = cfg.seed.wrapping_add(i as u64);
                let fitted =
                    fit_model(cfg.model, point, &cfg.scaler, &data, splits.train.clone(), seed)?;
                let pred = rolling_forecast(
                    fitted.model.forecaster(),
                    &data.returns,
                    &data.rv,
                    splits.val.clone(),
                    splits.train.end,
                )?;
                let m = evaluate(&pred, &data.rv[splits.val.clone()])?;
                Ok((m.rmse, fitted))
            })
            .map_err(|e| e.at_stage("grid"))?;
            let i = outcome.best_index;
            (
                outcome.best,
                points[i].clone(),
                cfg.seed.wrapping_add(i as u64),
                Some(outcome.leaderboard),
            )
        }
        None => {
            let fitted = fit_model(cfg.model, &cfg.train, &cfg.scaler, &data, splits.train.clone(), cfg.seed)
                .map_err(|e| e.at_stage("fit"))?;
            (fitted, cfg.train.clone(), cfg.seed, None)
        }
    };

    let predictions = rolling_forecast(
        fitted.model.forecaster(),
        &data.returns,
        &data.rv,
        splits.test.clone(),
        splits.train.end,
    )
    .map_err(|e| e.at_stage("forecast"))?;
    let targets = data.rv[splits.test.clone()].to_vec();
    let metrics = evaluate(&predictions, &targets).map_err(|e| e.at_stage("forecast"))?;
    let report = ForecastReport {
        model: cfg.model.name().to_string(),
        dates: data.dates[splits.test.clone()].to_vec(),
        predictions,
        targets,
        metrics,
        config: Some(serde_json::to_value(cfg).expect("config serializes")),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutcome {
        report,
        fitted,
        splits,
        selected,
        selected_seed,
        leaderboard,
    })
}

/// Paths of the files written by [`write_outputs`].
#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub report: PathBuf,
    pub forecasts: PathBuf,
    pub loss_history: PathBuf,
    pub model: PathBuf,
    pub timing: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            report: dir.join("report.json"),
            forecasts: dir.join("forecasts.csv"),
            loss_history: dir.join("loss_history.csv"),
            model: dir.join("model.txt"),
            timing: dir.join("timing.json"),
        }
    }
}

/// The deterministic part of the report: metrics, segment sizes, selected
/// settings, grid leaderboard and the config echo.
pub fn report_json(outcome: &ExperimentOutcome) -> String {
    let r = &outcome.report;
    let s = &outcome.splits;
    let mut doc = json!({
        "model": r.model,
        "metrics": r.metrics,
        "segments": { "train": s.train.len(), "val": s.val.len(), "test": s.test.len() },
        "test_start": r.dates.first().map(|d| d.to_string()),
        "test_end": r.dates.last().map(|d| d.to_string()),
        "config": r.config,
    });
    if matches!(outcome.fitted.model, SavedModel::SigmaLstm(_) | SavedModel::Lstm(_)) {
        doc["selected"] = json!({
            "hidden": outcome.selected.hidden,
            "learning_rate": outcome.selected.learning_rate,
            "epochs": outcome.selected.epochs,
            "window": outcome.selected.window,
            "seed": outcome.selected_seed,
        });
    }
    if let Some(board) = &outcome.leaderboard {
        doc["grid"] = serde_json::to_value(board).expect("leaderboard serializes");
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Write `report.json`, `forecasts.csv`, `loss_history.csv`, `model.txt`
/// and `timing.json` into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles::in_dir(dir);
    let write = |path: &Path, text: &str| std::fs::write(path, text).map_err(|e| Error::io(path, e));

    write(&files.report, &report_json(outcome))?;

    let r = &outcome.report;
    let mut csv = String::from("date,prediction,target\n");
    for ((d, p), t) in r.dates.iter().zip(&r.predictions).zip(&r.targets) {
        csv.push_str(&format!("{},{:.16e},{:.16e}\n", d.format("%Y-%m-%d"), p, t));
    }
    write(&files.forecasts, &csv)?;

    let mut hist = String::from("epoch,value\n");
    for (i, v) in outcome.fitted.history.iter().enumerate() {
        hist.push_str(&format!("{},{:.16e}\n", i + 1, v));
    }
    write(&files.loss_history, &hist)?;

    outcome.fitted.model.write(&files.model)?;

    let mut timing = Vec::new();
    writeln!(timing, "{{\"wall_time_secs\": {}}}", r.wall_time_secs).expect("write to vec");
    write(&files.timing, &String::from_utf8(timing).expect("utf8"))?;
    Ok(files)
}

/// Load a config file, run it and write the outputs to its `output.dir`.
pub fn run_experiment_file(config_path: &Path) -> Result<(ExperimentOutcome, OutputFiles)> {
    let cfg = ExperimentConfig::load(config_path).map_err(|e| e.at_stage("config"))?;
    let outcome = run_experiment(&cfg)?;
    let files = write_outputs(&outcome, &cfg.output.dir).map_err(|e| e.at_stage("write"))?;
    Ok((outcome, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim_config(model: &str, dir: &Path) -> String {
        format!(
            r#"
seed = 11
model = "{model}"
[data]
source = "simulate"
n = 700
omega = 0.05
alpha = 0.1
beta = 0.85
[train]
hidden = 3
epochs = 2
[output]
dir = "{}"
"#,
            dir.display()
        )
    }

    #[test]
    fn garch_smoke_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("exp.toml");
        std::fs::write(&cfg_path, sim_config("garch11", &dir.path().join("out"))).unwrap();
        let (a, files) = run_experiment_file(&cfg_path).unwrap();
        assert!(a.report.metrics.rmse.is_finite());
        assert_eq!(a.report.predictions.len(), 200);
        let first = std::fs::read(&files.report).unwrap();
        let first_csv = std::fs::read(&files.forecasts).unwrap();
        run_experiment_file(&cfg_path).unwrap();
        assert_eq!(std::fs::read(&files.report).unwrap(), first);
        assert_eq!(std::fs::read(&files.forecasts).unwrap(), first_csv);
    }

    #[test]
    fn every_model_runs() {
        let dir = tempfile::tempdir().unwrap();
        for model in ["garch11", "har", "lstm", "sigma-lstm"] {
            let cfg =
                ExperimentConfig::from_toml(&sim_config(model, dir.path()), dir.path()).unwrap();
            let out = run_experiment(&cfg).unwrap();
            assert!(out.report.metrics.rmse.is_finite(), "{model}");
            assert_eq!(out.fitted.history.len(), if cfg.model.is_neural() { 2 } else { 0 });
        }
    }

    #[test]
    fn grid_rejected_for_classical_models() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{}[grid]\nhidden = [2]\n", sim_config("har", dir.path()));
        let cfg = ExperimentConfig::from_toml(&text, dir.path()).unwrap();
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Config);
    }

    #[test]
    fn grid_run_reports_leaderboard() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{}[grid]\nhidden = [2, 3]\nlearning_rate = [0.003]\nepochs = [1]\n",
            sim_config("sigma-lstm", dir.path())
        );
        let cfg = ExperimentConfig::from_toml(&text, dir.path()).unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.leaderboard.as_ref().unwrap().len(), 2);
        let json = report_json(&out);
        assert!(json.contains("\"grid\""));
        assert!(json.contains("\"selected\""));
    }

    #[test]
    fn short_series_is_stage_tagged_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let text = sim_config("har", dir.path()).replace("n = 700", "n = 450");
        let cfg = ExperimentConfig::from_toml(&text, dir.path()).unwrap();
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.to_string().starts_with("[split]"), "{err}");
        assert_eq!(err.class(), crate::error::ErrorClass::Data);
    }

    #[test]
    fn har_on_noiseless_linear_rv_is_exact() {
        use crate::econo::{har_feature_row, har_forecast, HarParams, MONTH};
        let truth = HarParams { c: 0.2, beta_d: 0.5, beta_w: 0.2, beta_m: 0.1 };
        let mut g = crate::simgen::SplitMix64::new(3);
        let mut rv: Vec<f64> = (0..MONTH).map(|_| g.uniform(0.5, 2.0)).collect();
        while rv.len() < 700 {
            let f = har_feature_row(&rv).unwrap();
            rv.push(har_forecast(&truth, &f));
        }
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..rv.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
        let series = RvSeries::new(dates, rv.clone(), vec![None; rv.len()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rv.csv");
        series.write_csv(&csv).unwrap();
        let text = "seed = 1\nmodel = \"har\"\n[data]\nsource = \"rv\"\npath = \"rv.csv\"\n";
        let cfg = ExperimentConfig::from_toml(text, dir.path()).unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert!(out.report.metrics.rmse < 1e-6, "{}", out.report.metrics.rmse);
    }
}
