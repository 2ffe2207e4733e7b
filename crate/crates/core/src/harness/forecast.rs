use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cells::{
    sigma_lstm_step, vanilla_lstm_predict, SigmaLstmParams, SigmaLstmState, VanillaLstmParams,
};
use crate::econo::{garch11_filter, garch11_forecast, har_feature_row, har_forecast, GarchParams, HarParams};
use crate::error::{Error, Result};
use crate::rvpipe::Scaler;
use crate::simgen::{derive_seed, SplitMix64};

/// Everything observed strictly before the day being forecast.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    pub returns: &'a [f64],
    pub rv: &'a [f64],
}

impl History<'_> {
    pub fn len(&self) -> usize {
        self.rv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rv.is_empty()
    }
}

/// One-step-ahead volatility forecaster in target (daily volatility) units.
pub trait Forecaster: Sync {
    fn predict(&self, history: &History<'_>) -> Result<f64>;
}

/// GARCH(1,1) on returns demeaned by a fixed mean; predicts `sqrt(sigma2_t)`.
#[derive(Clone, Debug)]
pub struct GarchForecaster {
    pub params: GarchParams,
    pub mean: f64,
    pub sigma2_0: f64,
}

impl GarchForecaster {
    /// Conditional variance path over `returns`, demeaned and started at `sigma2_0`.
    pub fn filter(&self, returns: &[f64]) -> Result<Vec<f64>> {
        let demeaned: Vec<f64> = returns.iter().map(|r| r - self.mean).collect();
        garch11_filter(&self.params, &demeaned, Some(self.sigma2_0))
    }
}

impl Forecaster for GarchForecaster {
    fn predict(&self, h: &History<'_>) -> Result<f64> {
        let last = *h
            .returns
            .last()
            .ok_or_else(|| Error::InvalidArgument("GARCH forecast needs history".into()))?;
        let path = self.filter(h.returns)?;
        let s2 = garch11_forecast(&self.params, last - self.mean, *path.last().expect("non-empty"))?;
        Ok(s2.sqrt())
    }
}

/// HAR-RV on the RV history.
#[derive(Clone, Debug)]
pub struct HarForecaster {
    pub params: HarParams,
}

impl Forecaster for HarForecaster {
    fn predict(&self, h: &History<'_>) -> Result<f64> {
        Ok(har_forecast(&self.params, &har_feature_row(h.rv)?))
    }
}

/// σ-LSTM run from a zero state over the last `window` scaled returns.
///
/// With `samples == 0` the output gate noise is zero and the pass is
/// deterministic; otherwise the volatility estimate is averaged over
/// `samples` noise draws seeded by `seed` and the history length.
#[derive(Clone, Debug)]
pub struct SigmaLstmForecaster {
    pub params: SigmaLstmParams,
    pub scaler: Scaler,
    pub window: usize,
    pub samples: usize,
    pub seed: u64,
}

impl SigmaLstmForecaster {
    fn pass(&self, inputs: &[f64], rng: Option<&mut SplitMix64>) -> Result<f64> {
        let hidden = self.params.hidden();
        let mut state = SigmaLstmState::zeros(hidden);
        let mut sigma2 = f64::NAN;
        let zeros = vec![0.0; hidden];
        let mut rng = rng;
        for &x in inputs {
            let eps = match rng.as_deref_mut() {
                Some(g) => g.normals(hidden),
                None => zeros.clone(),
            };
            let out = sigma_lstm_step(&self.params, &state, x, &eps)?;
            sigma2 = out.sigma2;
            state = out.state;
        }
        Ok(sigma2)
    }
}

impl Forecaster for SigmaLstmForecaster {
    fn predict(&self, h: &History<'_>) -> Result<f64> {
        if h.returns.is_empty() {
            return Err(Error::InvalidArgument("σ-LSTM forecast needs history".into()));
        }
        let start = h.returns.len().saturating_sub(self.window);
        let inputs = self.scaler.apply_all(&h.returns[start..]);
        let sigma2 = if self.samples == 0 {
            self.pass(&inputs, None)?
        } else {
            let mut rng = SplitMix64::new(derive_seed(self.seed, h.returns.len() as u64));
            let mut total = 0.0;
            for _ in 0..self.samples {
                total += self.pass(&inputs, Some(&mut rng))?;
            }
            total / self.samples as f64
        };
        Ok(sigma2.sqrt() * self.scaler.scale())
    }
}

/// LSTM baseline over the last `window` scaled RV values.
#[derive(Clone, Debug)]
pub struct VanillaLstmForecaster {
    pub params: VanillaLstmParams,
    pub scaler: Scaler,
    pub window: usize,
}

impl Forecaster for VanillaLstmForecaster {
    fn predict(&self, h: &History<'_>) -> Result<f64> {
        if h.rv.is_empty() {
            return Err(Error::InvalidArgument("LSTM forecast needs history".into()));
        }
        let start = h.rv.len().saturating_sub(self.window);
        let inputs = self.scaler.apply_all(&h.rv[start..]);
        let out = vanilla_lstm_predict(&self.params, &inputs)?;
        Ok(self.scaler.invert(*out.last().expect("non-empty")))
    }
}

/// Predict each index of `span` from the data strictly before it.
///
/// `fit_end` is the end of the data the model was fitted on; a span starting
/// earlier would let fitted parameters see the targets and is rejected.
pub fn rolling_forecast(
    model: &dyn Forecaster,
    returns: &[f64],
    rv: &[f64],
    span: Range<usize>,
    fit_end: usize,
) -> Result<Vec<f64>> {
    if returns.len() != rv.len() {
        return Err(Error::InvalidArgument(format!(
            "{} returns but {} RV values",
            returns.len(),
            rv.len()
        )));
    }
    if span.start < fit_end {
        return Err(Error::Config(format!(
            "lookahead: forecast span starts at {} but the model was fitted through {}",
            span.start, fit_end
        )));
    }
    if span.end > rv.len() || span.start == 0 {
        return Err(Error::InvalidArgument(format!(
            "forecast span {span:?} does not fit a series of {}",
            rv.len()
        )));
    }
    span.map(|t| {
        let h = History {
            returns: &returns[..t],
            rv: &rv[..t],
        };
        let y = model.predict(&h)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numerical(format!("non-finite forecast at index {t}")))
        }
    })
    .collect()
}

/// Squared-error metrics of a forecast.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub n: usize,
}

pub fn evaluate(pred: &[f64], target: &[f64]) -> Result<Metrics> {
    if pred.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions but {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let mse = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        n: pred.len(),
    })
}

/// Test-span forecasts with their metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub model: String,
    pub dates: Vec<NaiveDate>,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
    pub metrics: Metrics,
    /// Echo of the experiment configuration, when run from one.
    pub config: Option<serde_json::Value>,
    /// Seconds spent; not written to `report.json`.
    #[serde(skip)]
    pub wall_time_secs: f64,
}
