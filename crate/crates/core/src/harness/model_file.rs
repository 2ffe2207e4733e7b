use std::path::Path;

use crate::cells::NetworkParams;
use crate::econo::{FittedModel, GarchVariant, ParamMap};
use crate::error::{Error, Result};
use crate::rvpipe::{Scaler, ScalerMode};

use super::forecast::{
    Forecaster, GarchForecaster, HarForecaster, SigmaLstmForecaster, VanillaLstmForecaster,
};

const WEIGHTS_MARKER: &str = "[weights]";

/// A fitted forecaster with everything needed to reproduce its predictions.
///
/// Stored as `key = value` lines; neural models append their weights after
/// a `[weights]` line.
#[derive(Clone, Debug)]
pub enum SavedModel {
    Garch {
        fit: FittedModel,
        forecaster: GarchForecaster,
    },
    Har(HarForecaster),
    SigmaLstm(SigmaLstmForecaster),
    Lstm(VanillaLstmForecaster),
}

fn scaler_entries(m: &mut ParamMap, s: &Scaler) {
    m.insert(
        "scaler_mode",
        match s.mode() {
            ScalerMode::Minmax => "minmax",
            ScalerMode::ScaleOnly => "scale-only",
        },
    );
    m.insert("scaler_min", s.min());
    m.insert("scaler_max", s.max());
}

fn scaler_from(m: &ParamMap) -> Result<Scaler> {
    let mode = match m.get("scaler_mode") {
        Some("minmax") => ScalerMode::Minmax,
        Some("scale-only") => ScalerMode::ScaleOnly,
        other => return Err(Error::Data(format!("bad scaler_mode {other:?}"))),
    };
    Scaler::fit(&[m.number("scaler_min")?, m.number("scaler_max")?], mode)
}

fn integer(m: &ParamMap, key: &str) -> Result<u64> {
    let raw = m
        .get(key)
        .ok_or_else(|| Error::Data(format!("missing key '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::Data(format!("key '{key}': '{raw}' is not an integer")))
}

impl SavedModel {
    pub fn forecaster(&self) -> &dyn Forecaster {
        match self {
            SavedModel::Garch { forecaster, .. } => forecaster,
            SavedModel::Har(f) => f,
            SavedModel::SigmaLstm(f) => f,
            SavedModel::Lstm(f) => f,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            SavedModel::Garch { fit, forecaster } => {
                let mut m = fit.to_map();
                m.insert("mean", forecaster.mean);
                m.to_text()
            }
            SavedModel::Har(f) => FittedModel::Har(f.params).to_map().to_text(),
            SavedModel::SigmaLstm(f) => {
                let mut m = ParamMap::new();
                m.insert("model", "sigma-lstm");
                scaler_entries(&mut m, &f.scaler);
                m.insert("window", f.window);
                m.insert("samples", f.samples);
                m.insert("seed", f.seed);
                let weights = NetworkParams::Sigma(f.params.clone()).to_text();
                format!("{}{WEIGHTS_MARKER}\n{weights}", m.to_text())
            }
            SavedModel::Lstm(f) => {
                let mut m = ParamMap::new();
                m.insert("model", "lstm");
                scaler_entries(&mut m, &f.scaler);
                m.insert("window", f.window);
                let weights = NetworkParams::Vanilla(f.params.clone()).to_text();
                format!("{}{WEIGHTS_MARKER}\n{weights}", m.to_text())
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, weights) = match text.split_once(WEIGHTS_MARKER) {
            Some((h, w)) => (h, Some(w)),
            None => (text, None),
        };
        let m = ParamMap::parse(head)?;
        match (m.get("model"), weights) {
            (Some("garch"), None) => {
                let fit = FittedModel::from_map(&m)?;
                let FittedModel::Garch { variant, params, sigma2_0, .. } = &fit else {
                    unreachable!("garch key parsed as GARCH")
                };
                if *variant != GarchVariant::Garch11 {
                    return Err(Error::Data(format!("cannot forecast with {variant} parameters")));
                }
                let forecaster = GarchForecaster {
                    params: params.clone(),
                    mean: m.number("mean")?,
                    sigma2_0: *sigma2_0,
                };
                Ok(SavedModel::Garch { fit, forecaster })
            }
            (Some("har"), None) => match FittedModel::from_map(&m)? {
                FittedModel::Har(params) => Ok(SavedModel::Har(HarForecaster { params })),
                _ => unreachable!("har key parsed as HAR"),
            },
            (Some("sigma-lstm"), Some(w)) => match NetworkParams::from_text(w)? {
                NetworkParams::Sigma(params) => Ok(SavedModel::SigmaLstm(SigmaLstmForecaster {
                    params,
                    scaler: scaler_from(&m)?,
                    window: integer(&m, "window")? as usize,
                    samples: integer(&m, "samples")? as usize,
                    seed: integer(&m, "seed")?,
                })),
                _ => Err(Error::Data("sigma-lstm model file holds LSTM weights".into())),
            },
            (Some("lstm"), Some(w)) => match NetworkParams::from_text(w)? {
                NetworkParams::Vanilla(params) => Ok(SavedModel::Lstm(VanillaLstmForecaster {
                    params,
                    scaler: scaler_from(&m)?,
                    window: integer(&m, "window")? as usize,
                })),
                _ => Err(Error::Data("lstm model file holds σ-LSTM weights".into())),
            },
            (Some(other), _) => Err(Error::Data(format!("malformed model file for '{other}'"))),
            (None, _) => Err(Error::Data("model file has no 'model' key".into())),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
