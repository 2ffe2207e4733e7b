use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rvpipe::{ScalerMode, SplitSpec, TimestampFormat, DEFAULT_MIN_INTRADAY_OBS};
use crate::simgen::DEFAULT_BURN_IN;

/// Which forecaster an experiment fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "garch11")]
    Garch11,
    #[serde(rename = "har")]
    Har,
    #[serde(rename = "lstm")]
    Lstm,
    #[serde(rename = "sigma-lstm")]
    SigmaLstm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Garch11 => "garch11",
            ModelKind::Har => "har",
            ModelKind::Lstm => "lstm",
            ModelKind::SigmaLstm => "sigma-lstm",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, ModelKind::Lstm | ModelKind::SigmaLstm)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "garch11" => Ok(ModelKind::Garch11),
            "har" => Ok(ModelKind::Har),
            "lstm" => Ok(ModelKind::Lstm),
            "sigma-lstm" => Ok(ModelKind::SigmaLstm),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected garch11, har, lstm or sigma-lstm)"
            ))),
        }
    }
}

/// Where the daily series comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// Simulated GARCH(1,1) returns; RV is the true volatility times
    /// lognormal noise of scale `rv_noise`.
    Simulate {
        n: usize,
        omega: f64,
        alpha: f64,
        beta: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default)]
        rv_noise: f64,
    },
    /// Intraday `timestamp,price` CSV aggregated to daily RV.
    Prices {
        path: PathBuf,
        #[serde(default)]
        timestamp_format: TimestampFormat,
        #[serde(default = "default_min_obs")]
        min_intraday_obs: usize,
    },
    /// Precomputed `date,rv,ret` CSV.
    Rv { path: PathBuf },
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_min_obs() -> usize {
    DEFAULT_MIN_INTRADAY_OBS
}

/// Which return the σ-LSTM likelihood scores at each step during training.
///
/// Predictive is the default: like a GARCH filter, the variance scored
/// against `r_t` is built from returns before `t`. Under filtering the cell
/// sees the return it is scored on and learns to echo `r_t^2`, which
/// forecasts worse than a constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Step `t` consumes `r_t` and is scored against `r_t`.
    Filtering,
    /// Step `t` consumes `r_{t-1}` and is scored against `r_t`.
    #[default]
    Predictive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Training window and forecast context length.
    pub window: usize,
    /// Noise draws per training window (gradients averaged).
    pub train_samples: usize,
    /// Forecast noise draws; 0 uses the deterministic zero-noise pass.
    pub samples: usize,
    pub alignment: Alignment,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 8,
            learning_rate: 3e-3,
            epochs: 200,
            window: 22,
            train_samples: 1,
            samples: 0,
            alignment: Alignment::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalerConfig {
    /// Scaling of returns fed to the σ-LSTM.
    pub returns: ScalerMode,
    /// Scaling of RV fed to the LSTM baseline.
    pub rv: ScalerMode,
}

impl Default for ScalerConfig {
    fn default() -> Self {
        Self {
            returns: ScalerMode::ScaleOnly,
            rv: ScalerMode::Minmax,
        }
    }
}

/// Hyperparameter grid; points are enumerated hidden-major, then learning
/// rate, then epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            hidden: vec![4, 8, 16],
            learning_rate: vec![1e-3, 3e-3],
            epochs: vec![50, 200],
        }
    }
}

impl GridConfig {
    pub fn points(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &hidden in &self.hidden {
            for &learning_rate in &self.learning_rate {
                for &epochs in &self.epochs {
                    out.push(TrainConfig {
                        hidden,
                        learning_rate,
                        epochs,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A complete experiment description, read from TOML.
///
/// ```toml
/// seed = 7
/// model = "sigma-lstm"
///
/// [data]
/// source = "simulate"
/// n = 5000
/// omega = 0.05
/// alpha = 0.1
/// beta = 0.85
///
/// [train]
/// hidden = 8
/// epochs = 200
/// ```
///
/// Relative paths are resolved against the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelKind,
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub scaler: ScalerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parse TOML text; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataConfig::Prices { path, .. } | DataConfig::Rv { path } => fix(path),
            DataConfig::Simulate { .. } => {}
        }
        fix(&mut self.output.dir);
    }

    /// Check value ranges and that input files exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match &self.data {
            DataConfig::Simulate { n, omega, alpha, beta, rv_noise, .. } => {
                if *n == 0 {
                    return bad("data.n must be >= 1".into());
                }
                if !(*omega > 0.0) || !(*alpha >= 0.0) || !(*beta >= 0.0) || !(alpha + beta < 1.0) {
                    return bad(format!(
                        "simulation parameters must satisfy omega > 0, alpha, beta >= 0, alpha + beta < 1 (got {omega}, {alpha}, {beta})"
                    ));
                }
                if !(*rv_noise >= 0.0 && rv_noise.is_finite()) {
                    return bad(format!("data.rv_noise must be >= 0, got {rv_noise}"));
                }
            }
            DataConfig::Prices { path, min_intraday_obs, .. } => {
                if !path.is_file() {
                    return bad(format!("price file {} does not exist", path.display()));
                }
                if *min_intraday_obs < 2 {
                    return bad("data.min_intraday_obs must be >= 2".into());
                }
            }
            DataConfig::Rv { path } => {
                if !path.is_file() {
                    return bad(format!("RV file {} does not exist", path.display()));
                }
            }
        }
        validate_train(&self.train)?;
        if let Some(grid) = &self.grid {
            if grid.hidden.is_empty() || grid.learning_rate.is_empty() || grid.epochs.is_empty() {
                return bad("grid lists must be non-empty".into());
            }
            for point in grid.points(&self.train) {
                validate_train(&point)?;
            }
        }
        Ok(())
    }
}

fn validate_train(t: &TrainConfig) -> Result<()> {
    let bad = |msg: String| Err(Error::Config(msg));
    if t.hidden == 0 {
        return bad("train.hidden must be >= 1".into());
    }
    if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
        return bad(format!("train.learning_rate must be > 0, got {}", t.learning_rate));
    }
    if t.window == 0 {
        return bad("train.window must be >= 1".into());
    }
    if t.train_samples == 0 {
        return bad("train.train_samples must be >= 1".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
model = "garch11"
[data]
source = "simulate"
n = 1000
omega = 0.05
alpha = 0.1
beta = 0.85
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, Path::new("/tmp/x")).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.train.window, 22);
        assert_eq!(cfg.split, SplitSpec::default());
        assert_eq!(cfg.scaler.returns, ScalerMode::ScaleOnly);
        assert_eq!(cfg.output.dir, PathBuf::from("/tmp/x/out"));
        match cfg.data {
            DataConfig::Simulate { burn_in, rv_noise, .. } => {
                assert_eq!(burn_in, DEFAULT_BURN_IN);
                assert_eq!(rv_noise, 0.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 3\n", "");
        let err = ExperimentConfig::from_toml(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let cases = [
            MINIMAL.replace("seed = 3\n", "seed = 3\ncolour = 1\n"),
            format!("{MINIMAL}[train]\nhiden = 4\n"),
            format!("{MINIMAL}[split]\nn_tset = 5\n"),
            MINIMAL.replace("beta = 0.85", "beta = 0.85\nfoo = 1"),
        ];
        for text in &cases {
            assert!(ExperimentConfig::from_toml(text, Path::new(".")).is_err(), "{text}");
        }
    }

    #[test]
    fn missing_file_rejected() {
        let text = "seed = 1\nmodel = \"har\"\n[data]\nsource = \"rv\"\npath = \"nope.csv\"\n";
        let err = ExperimentConfig::from_toml(text, Path::new("/nonexistent")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn nonstationary_simulation_rejected() {
        let text = MINIMAL.replace("beta = 0.85", "beta = 0.95");
        assert!(ExperimentConfig::from_toml(&text, Path::new(".")).is_err());
    }

    #[test]
    fn grid_enumeration_order() {
        let g = GridConfig {
            hidden: vec![4, 8],
            learning_rate: vec![0.1, 0.2],
            epochs: vec![1],
        };
        let pts = g.points(&TrainConfig::default());
        let keys: Vec<(usize, f64)> = pts.iter().map(|p| (p.hidden, p.learning_rate)).collect();
        assert_eq!(keys, vec![(4, 0.1), (4, 0.2), (8, 0.1), (8, 0.2)]);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
