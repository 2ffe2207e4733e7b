use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Days in the weekly and monthly HAR aggregates.
pub const WEEK: usize = 5;
pub const MONTH: usize = 22;
/// Minimum regression rows accepted by [`har_fit`].
pub const MIN_FIT_ROWS: usize = 30;

/// Reduced-form HAR-RV coefficients:
/// `rv_{t+1} = c + beta_d * rv_d + beta_w * rv_w + beta_m * rv_m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HarParams {
    pub c: f64,
    pub beta_d: f64,
    pub beta_w: f64,
    pub beta_m: f64,
}

/// Daily, weekly and monthly RV aggregates at one date.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarFeatures {
    pub daily: f64,
    pub weekly: f64,
    pub monthly: f64,
}

impl HarFeatures {
    fn as_row(&self) -> [f64; 4] {
        [1.0, self.daily, self.weekly, self.monthly]
    }
}

impl std::ops::Add for HarFeatures {
    type Output = HarFeatures;

    fn add(self, rhs: Self) -> Self {
        HarFeatures {
            daily: self.daily + rhs.daily,
            weekly: self.weekly + rhs.weekly,
            monthly: self.monthly + rhs.monthly,
        }
    }
}

/// Regression design: features at each date and the next day's RV.
#[derive(Clone, Debug, PartialEq)]
pub struct HarDesign {
    pub rows: Vec<HarFeatures>,
    pub targets: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Aggregates computed from the last [`MONTH`] values of `history`, i.e. the
/// features dated at its final element.
pub fn har_feature_row(history: &[f64]) -> Result<HarFeatures> {
    let n = history.len();
    if n < MONTH {
        return Err(Error::InvalidArgument(format!(
            "HAR features need {MONTH} observations of history, got {n}"
        )));
    }
    Ok(HarFeatures {
        daily: history[n - 1],
        weekly: mean(&history[n - WEEK..]),
        monthly: mean(&history[n - MONTH..]),
    })
}

/// Features for every date that has both a full month of history and a
/// next-day target: `n - 22` rows for a series of length `n`.
pub fn har_features(rv: &[f64]) -> Result<HarDesign> {
    if rv.len() < MONTH + 1 {
        return Err(Error::InvalidArgument(format!(
            "HAR needs at least {} observations, got {}",
            MONTH + 1,
            rv.len()
        )));
    }
    let rows = (MONTH..rv.len())
        .map(|end| har_feature_row(&rv[..end]))
        .collect::<Result<Vec<_>>>()?;
    let targets = rv[MONTH..].to_vec();
    Ok(HarDesign { rows, targets })
}

/// Ordinary least squares of next-day RV on the HAR aggregates.
pub fn har_fit(rv: &[f64]) -> Result<HarParams> {
    har_fit_design(&har_features(rv)?)
}

pub fn har_fit_design(design: &HarDesign) -> Result<HarParams> {
    let k = design.rows.len();
    if k < MIN_FIT_ROWS {
        return Err(Error::InvalidArgument(format!(
            "HAR fit needs at least {MIN_FIT_ROWS} rows, got {k}"
        )));
    }
    let x = DMatrix::from_fn(k, 4, |i, j| design.rows[i].as_row()[j]);
    let y = DVector::from_column_slice(&design.targets);
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Data("HAR design contains non-finite values".into()));
    }

    let beta = solve_normal_equations(&x, &y).map_or_else(|| solve_svd(&x, &y), Ok)?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("HAR least squares produced non-finite coefficients".into()));
    }
    Ok(HarParams {
        c: beta[0],
        beta_d: beta[1],
        beta_w: beta[2],
        beta_m: beta[3],
    })
}

/// Cholesky solve of (X'X) b = X'y; `None` when X'X is numerically singular.
fn solve_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = xtx.cholesky()?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    // squared pivot ratio bounds the reciprocal condition number of X'X
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-12 {
        return None;
    }
    Some(chol.solve(&xty))
}

/// Minimum-norm least squares via SVD, for rank-deficient designs.
fn solve_svd(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    log::debug!("HAR design near-singular; using SVD least squares");
    let svd = x.clone().svd(true, true);
    let top = svd.singular_values.max();
    if !(top > 0.0) {
        return Err(Error::Numerical("HAR design is singular".into()));
    }
    svd.solve(y, top * 1e-10)
        .map_err(|e| Error::Numerical(format!("HAR SVD solve failed: {e}")))
}

/// `c + beta_d * d + beta_w * w + beta_m * m`.
pub fn har_forecast(p: &HarParams, f: &HarFeatures) -> f64 {
    p.c + p.beta_d * f.daily + p.beta_w * f.weekly + p.beta_m * f.monthly
}
