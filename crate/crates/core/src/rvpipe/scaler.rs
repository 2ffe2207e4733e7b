use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerMode {
    /// `(x - min) / (max - min)`.
    Minmax,
    /// `x / max|x|`; keeps zero at zero and signs intact.
    ScaleOnly,
}

/// Affine scaler fitted on a training segment: `y = (x - offset) / scale`.
///
/// Values outside the training range map outside [0, 1] (or [-1, 1]); there
/// is no clipping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    mode: ScalerMode,
    min: f64,
    max: f64,
    offset: f64,
    scale: f64,
}

impl Scaler {
    pub fn fit(train: &[f64], mode: ScalerMode) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a scaler on no data".into()));
        }
        if train.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("scaler training data contains non-finite values".into()));
        }
        let min = train.iter().copied().fold(f64::INFINITY, f64::min);
        let max = train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (offset, scale) = match mode {
            ScalerMode::Minmax => (min, max - min),
            ScalerMode::ScaleOnly => (0.0, min.abs().max(max.abs())),
        };
        if !(scale > 0.0) {
            return Err(Error::Data(format!(
                "degenerate scaler: training data has min {min} and max {max}"
            )));
        }
        Ok(Self {
            mode,
            min,
            max,
            offset,
            scale,
        })
    }

    pub fn mode(&self) -> ScalerMode {
        self.mode
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Divisor of the affine map; converts scaled volatilities back for
    /// scale-only inputs.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * self.scale + self.offset
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}
