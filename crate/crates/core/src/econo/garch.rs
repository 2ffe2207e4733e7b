use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};

/// Parameters of GARCH(1,1) and the GARCH-family filters.
///
/// Only `omega`, `alpha` and `beta` matter for GARCH(1,1). The remaining
/// fields are the variant-specific terms: `delta` (eGARCH asymmetry),
/// `gamma` (GJR threshold), `phi` (TGARCH threshold), `rho` and `theta`
/// (cGARCH long-run component). `mu` is the return mean and is 0 for every
/// model fitted by this crate; callers demean instead.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub mu: f64,
}

impl GarchParams {
    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            omega,
            alpha,
            beta,
            ..Self::default()
        };
        p.validate_garch11()?;
        Ok(p)
    }

    fn check_finite(&self) -> Result<()> {
        let all = [
            self.omega, self.alpha, self.beta, self.delta, self.gamma, self.phi, self.rho,
            self.theta, self.mu,
        ];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("non-finite parameter in {self:?}")))
        }
    }

    /// omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1.
    pub fn validate_garch11(&self) -> Result<()> {
        self.check_finite()?;
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha and beta must be >= 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.alpha + self.beta >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "alpha + beta must be < 1 for stationarity, got {}",
                self.alpha + self.beta
            )));
        }
        Ok(())
    }

    pub fn validate(&self, variant: GarchVariant) -> Result<()> {
        self.check_finite()?;
        match variant {
            GarchVariant::Garch11 => self.validate_garch11(),
            GarchVariant::Gjr => {
                if self.omega <= 0.0 || self.alpha < 0.0 || self.beta < 0.0 {
                    return Err(Error::InvalidParams(
                        "GJR needs omega > 0, alpha >= 0, beta >= 0".into(),
                    ));
                }
                let persistence = self.alpha + self.gamma / 2.0 + self.beta;
                if persistence >= 1.0 || self.alpha + self.gamma < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "GJR needs alpha + gamma/2 + beta < 1 and alpha + gamma >= 0, got persistence {persistence}"
                    )));
                }
                Ok(())
            }
            GarchVariant::Egarch => {
                if self.beta.abs() >= 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "eGARCH needs |beta| < 1, got {}",
                        self.beta
                    )));
                }
                Ok(())
            }
            GarchVariant::Cgarch => {
                if self.rho.abs() >= 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "cGARCH needs |rho| < 1, got {}",
                        self.rho
                    )));
                }
                Ok(())
            }
            GarchVariant::Tgarch => {
                if self.omega <= 0.0 || self.beta < 0.0 || self.beta >= 1.0 {
                    return Err(Error::InvalidParams(
                        "TGARCH needs omega > 0 and 0 <= beta < 1".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// omega / (1 - alpha - beta).
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// GARCH-family member selected by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GarchVariant {
    Garch11,
    Egarch,
    Cgarch,
    Gjr,
    Tgarch,
}

impl GarchVariant {
    pub fn name(self) -> &'static str {
        match self {
            GarchVariant::Garch11 => "garch11",
            GarchVariant::Egarch => "egarch",
            GarchVariant::Cgarch => "cgarch",
            GarchVariant::Gjr => "gjr",
            GarchVariant::Tgarch => "tgarch",
        }
    }
}

impl fmt::Display for GarchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GarchVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "garch11" | "garch" => Ok(GarchVariant::Garch11),
            "egarch" => Ok(GarchVariant::Egarch),
            "cgarch" => Ok(GarchVariant::Cgarch),
            "gjr" | "gjr-garch" => Ok(GarchVariant::Gjr),
            "tgarch" => Ok(GarchVariant::Tgarch),
            other => Err(Error::InvalidArgument(format!("unknown GARCH variant '{other}'"))),
        }
    }
}

/// One GARCH(1,1) step: omega + alpha * r^2 + beta * sigma2.
#[inline]
pub(crate) fn garch11_next(p: &GarchParams, r: f64, sigma2: f64) -> f64 {
    p.omega + p.alpha * r * r + p.beta * sigma2
}

/// Population variance, the default first-step variance of every filter.
pub fn sample_variance(r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

fn initial_variance(r: &[f64], sigma2_0: Option<f64>) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::InvalidArgument("return series is empty".into()));
    }
    let v = sigma2_0.unwrap_or_else(|| sample_variance(r));
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Numerical(format!(
            "initial variance must be positive and finite, got {v}"
        )));
    }
    Ok(v)
}

/// Conditional variance path of GARCH(1,1).
///
/// `sigma2[0]` is `sigma2_0`, or the sample variance of `r` when not given;
/// `sigma2[t] = omega + alpha * r[t-1]^2 + beta * sigma2[t-1]` afterwards.
pub fn garch11_filter(p: &GarchParams, r: &[f64], sigma2_0: Option<f64>) -> Result<Vec<f64>> {
    p.validate_garch11()?;
    let mut s2 = initial_variance(r, sigma2_0)?;
    let mut out = Vec::with_capacity(r.len());
    out.push(s2);
    for &rt in &r[..r.len() - 1] {
        s2 = garch11_next(p, rt, s2);
        out.push(s2);
    }
    Ok(out)
}

/// One-step-ahead GARCH(1,1) variance given the last return and variance.
pub fn garch11_forecast(p: &GarchParams, last_r: f64, last_sigma2: f64) -> Result<f64> {
    p.validate_garch11()?;
    Ok(garch11_next(p, last_r, last_sigma2))
}

fn positive(v: f64, step: usize, variant: GarchVariant) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "{variant} filter produced non-positive variance {v} at step {}",
            step + 1
        )))
    }
}

/// Conditional variance path for a GARCH-family member.
///
/// Innovations are `eps = r - mu`. TGARCH evolves the conditional standard
/// deviation; its output is squared so every variant returns variances.
pub fn garch_variant_filter(
    variant: GarchVariant,
    p: &GarchParams,
    r: &[f64],
    sigma2_0: Option<f64>,
) -> Result<Vec<f64>> {
    p.validate(variant)?;
    let s2_first = initial_variance(r, sigma2_0)?;
    let n = r.len();
    let mut out = Vec::with_capacity(n);
    out.push(s2_first);
    match variant {
        GarchVariant::Garch11 => return garch11_filter(p, r, sigma2_0),
        GarchVariant::Egarch => {
            let mean_abs_z = FRAC_2_PI.sqrt();
            let mut log_s2 = s2_first.ln();
            for t in 1..n {
                let z = (r[t - 1] - p.mu) / (0.5 * log_s2).exp();
                log_s2 = p.omega + p.alpha * (z.abs() - mean_abs_z) + p.delta * z + p.beta * log_s2;
                out.push(positive(log_s2.exp(), t, variant)?);
            }
        }
        GarchVariant::Cgarch => {
            let mut q = s2_first;
            let mut s2 = s2_first;
            for t in 1..n {
                let e = r[t - 1] - p.mu;
                let e2 = e * e;
                let q_next = p.omega + p.rho * q + p.theta * (e2 - s2);
                let s2_next = q_next + p.alpha * (e2 - q) + p.beta * (s2 - q);
                q = q_next;
                s2 = positive(s2_next, t, variant)?;
                out.push(s2);
            }
        }
        GarchVariant::Gjr => {
            let mut s2 = s2_first;
            for t in 1..n {
                let e = r[t - 1] - p.mu;
                let indicator = if r[t - 1] < p.mu { 1.0 } else { 0.0 };
                s2 = positive(
                    p.omega + (p.alpha + p.gamma * indicator) * e * e + p.beta * s2,
                    t,
                    variant,
                )?;
                out.push(s2);
            }
        }
        GarchVariant::Tgarch => {
            let mut sigma = s2_first.sqrt();
            for t in 1..n {
                let e = r[t - 1] - p.mu;
                let below = if e < 0.0 { 1.0 } else { 0.0 };
                sigma = p.omega + p.alpha * e + p.beta * sigma + p.phi * e * below;
                let sigma = positive(sigma, t, variant)?;
                out.push(sigma * sigma);
            }
        }
    }
    Ok(out)
}

/// Gaussian log-likelihood of `r` under GARCH(1,1),
/// `sum(-0.5 ln(2 pi sigma2_t) - r_t^2 / (2 sigma2_t))`.
pub fn garch11_log_likelihood(p: &GarchParams, r: &[f64], sigma2_0: Option<f64>) -> Result<f64> {
    let s2 = garch11_filter(p, r, sigma2_0)?;
    Ok(log_likelihood_of_path(r, &s2))
}

fn log_likelihood_of_path(r: &[f64], s2: &[f64]) -> f64 {
    let ln_2pi = (2.0 * PI).ln();
    r.iter()
        .zip(s2)
        .map(|(&rt, &v)| -0.5 * (ln_2pi + v.ln()) - rt * rt / (2.0 * v))
        .sum()
}

/// Minimum sample size accepted by [`garch11_fit`].
pub const MIN_FIT_LEN: usize = 100;

/// (persistence alpha+beta, alpha share of persistence) for each start.
const STARTS: [(f64, f64); 8] = [
    (0.50, 0.20),
    (0.70, 0.10),
    (0.80, 0.30),
    (0.90, 0.05),
    (0.90, 0.15),
    (0.95, 0.10),
    (0.98, 0.05),
    (0.99, 0.30),
];

/// Outcome of a GARCH(1,1) maximum-likelihood fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    pub log_likelihood: f64,
    /// First-step variance used by the likelihood (sample variance of the data).
    pub sigma2_0: f64,
    pub n: usize,
    /// Index of the winning start point.
    pub start_index: usize,
    pub evaluations: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    crate::diffcore::sigmoid(x)
}

/// Map unconstrained (ln omega, logit persistence, logit alpha-share) to
/// admissible GARCH(1,1) parameters.
fn decode(u: &[f64]) -> GarchParams {
    let persistence = logistic(u[1]);
    let share = logistic(u[2]);
    GarchParams {
        omega: u[0].exp(),
        alpha: persistence * share,
        beta: persistence * (1.0 - share),
        ..GarchParams::default()
    }
}

/// Fit GARCH(1,1) by Gaussian maximum likelihood.
///
/// The search runs a Nelder-Mead simplex in an unconstrained
/// reparameterization from eight spread starting points (evaluated in
/// parallel). The best likelihood wins, ties going to the lowest start index.
pub fn garch11_fit(r: &[f64]) -> Result<GarchFit> {
    if r.len() < MIN_FIT_LEN {
        return Err(Error::InvalidArgument(format!(
            "GARCH fit needs at least {MIN_FIT_LEN} returns, got {}",
            r.len()
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("return series contains non-finite values".into()));
    }
    let var = sample_variance(r);
    if !(var > 0.0) {
        return Err(Error::Numerical(
            "degenerate likelihood: returns have zero variance".into(),
        ));
    }

    let objective = |u: &[f64]| -> f64 {
        let p = decode(u);
        if !(p.omega > 0.0 && p.alpha + p.beta < 1.0) {
            return f64::INFINITY;
        }
        match garch11_filter(&p, r, Some(var)) {
            Ok(s2) => -log_likelihood_of_path(r, &s2),
            Err(_) => f64::INFINITY,
        }
    };

    let opts = SimplexOptions::default();
    let runs: Vec<_> = STARTS
        .par_iter()
        .map(|&(persistence, share)| {
            let x0 = [
                (var * (1.0 - persistence)).ln(),
                logit(persistence),
                logit(share),
            ];
            let start_value = objective(&x0);
            let res = nelder_mead(objective, &x0, &opts);
            (start_value, res)
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut evaluations = 0;
    for (i, (_, res)) in runs.iter().enumerate() {
        evaluations += res.evaluations;
        if !res.value.is_finite() {
            continue;
        }
        // strict improvement keeps the lowest index on ties
        if best.map_or(true, |(_, v)| res.value < v) {
            best = Some((i, res.value));
        }
    }
    let Some((start_index, neg_ll)) = best else {
        let diag: Vec<String> = runs
            .iter()
            .enumerate()
            .map(|(i, (s, res))| format!("start {i}: initial {s:.6e}, final {:.6e}", res.value))
            .collect();
        return Err(Error::Numerical(format!(
            "GARCH(1,1) fit failed from every start ({})",
            diag.join("; ")
        )));
    };

    Ok(GarchFit {
        params: decode(&runs[start_index].1.x),
        log_likelihood: -neg_ll,
        sigma2_0: var,
        n: r.len(),
        start_index,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{simulate_garch11, SplitMix64, DEFAULT_BURN_IN};

    fn sample_returns(n: usize, seed: u64) -> Vec<f64> {
        let mut g = SplitMix64::new(seed);
        g.normals(n)
    }

    #[test]
    fn constant_filter() {
        let p = GarchParams::garch11(0.1, 0.0, 0.0).unwrap();
        let s2 = garch11_filter(&p, &sample_returns(50, 1), None).unwrap();
        assert!(s2[1..].iter().all(|&v| v == 0.1));
    }

    #[test]
    fn one_step_arithmetic() {
        let p = GarchParams::garch11(0.1, 0.2, 0.7).unwrap();
        let s2 = garch11_filter(&p, &[1.0, 0.3], Some(1.0)).unwrap();
        assert!((s2[1] - 1.0).abs() < 1e-15);
        assert!((garch11_forecast(&p, 0.0, 1.0).unwrap() - 0.8).abs() < 1e-15);
        let flat = GarchParams::garch11(0.4, 0.0, 0.0).unwrap();
        assert_eq!(garch11_forecast(&flat, 3.0, 9.0).unwrap(), 0.4);
    }

    #[test]
    fn forecast_matches_extended_filter() {
        let p = GarchParams::garch11(0.05, 0.1, 0.85).unwrap();
        let r = sample_returns(300, 2);
        let s2 = garch11_filter(&p, &r[..299], Some(0.9)).unwrap();
        let next = garch11_forecast(&p, r[298], s2[298]).unwrap();
        let extended = garch11_filter(&p, &r, Some(0.9)).unwrap();
        assert_eq!(next.to_bits(), extended[299].to_bits());
    }

    #[test]
    fn filter_rejects_bad_params() {
        let bad = GarchParams {
            omega: 0.1,
            alpha: 0.5,
            beta: 0.5,
            ..Default::default()
        };
        assert!(garch11_filter(&bad, &[0.1, 0.2], None).is_err());
        assert!(GarchParams::garch11(0.0, 0.1, 0.1).is_err());
        assert!(GarchParams::garch11(0.1, -0.1, 0.1).is_err());
        let p = GarchParams::garch11(0.1, 0.1, 0.1).unwrap();
        assert!(garch11_filter(&p, &[], None).is_err());
    }

    #[test]
    fn long_run_level() {
        let p = GarchParams::garch11(0.05, 0.1, 0.85).unwrap();
        let path = simulate_garch11(&p, 50_000, 77, DEFAULT_BURN_IN).unwrap();
        let s2 = garch11_filter(&p, &path.returns, None).unwrap();
        let avg = s2.iter().sum::<f64>() / s2.len() as f64;
        assert!((avg / p.unconditional_variance() - 1.0).abs() < 0.05, "avg {avg}");
    }

    #[test]
    fn gjr_without_threshold_is_garch() {
        let base = GarchParams::garch11(0.05, 0.1, 0.85).unwrap();
        let r = sample_returns(2_000, 3);
        let g = garch11_filter(&base, &r, None).unwrap();
        let j = garch_variant_filter(GarchVariant::Gjr, &base, &r, None).unwrap();
        assert_eq!(g, j);
    }

    #[test]
    fn gjr_threshold_raises_variance_after_losses() {
        let p = GarchParams {
            gamma: 0.1,
            ..GarchParams::garch11(0.05, 0.05, 0.85).unwrap()
        };
        let s_down = garch_variant_filter(GarchVariant::Gjr, &p, &[-1.0, 0.0], Some(1.0)).unwrap();
        let s_up = garch_variant_filter(GarchVariant::Gjr, &p, &[1.0, 0.0], Some(1.0)).unwrap();
        assert!((s_down[1] - (0.05 + 0.15 + 0.85)).abs() < 1e-15);
        assert!((s_up[1] - (0.05 + 0.05 + 0.85)).abs() < 1e-15);
    }

    #[test]
    fn egarch_constant_log_variance() {
        let p = GarchParams {
            omega: -0.7,
            ..Default::default()
        };
        let s2 = garch_variant_filter(GarchVariant::Egarch, &p, &sample_returns(100, 4), None).unwrap();
        for v in &s2[1..] {
            assert!((v.ln() - (-0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn egarch_recursion_by_hand() {
        let p = GarchParams {
            omega: 0.01,
            alpha: 0.2,
            delta: -0.1,
            beta: 0.9,
            ..Default::default()
        };
        let s2 = garch_variant_filter(GarchVariant::Egarch, &p, &[-0.5, 0.0], Some(0.25)).unwrap();
        let z: f64 = -0.5 / 0.5;
        let expected = 0.01 + 0.2 * (z.abs() - (2.0 / PI).sqrt()) + (-0.1) * z + 0.9 * 0.25f64.ln();
        assert!((s2[1].ln() - expected).abs() < 1e-12);
    }

    #[test]
    fn cgarch_without_long_run_dynamics() {
        // rho = theta = 0 gives q_t = omega from step 2 and
        // sigma2_t = omega + alpha (e^2 - q_{t-1}) + beta (sigma2_{t-1} - q_{t-1}).
        let p = GarchParams {
            omega: 0.5,
            alpha: 0.1,
            beta: 0.6,
            ..Default::default()
        };
        let r = sample_returns(200, 5);
        let s2 = garch_variant_filter(GarchVariant::Cgarch, &p, &r, Some(0.7)).unwrap();
        let mut q_prev = 0.7;
        let mut s_prev = 0.7;
        for t in 1..r.len() {
            let e2 = r[t - 1] * r[t - 1];
            let expected = 0.5 + 0.1 * (e2 - q_prev) + 0.6 * (s_prev - q_prev);
            assert!((s2[t] - expected).abs() < 1e-12, "step {t}");
            q_prev = 0.5;
            s_prev = expected;
        }
    }

    #[test]
    fn cgarch_negative_variance_names_step() {
        // q_2 = 0.01 and sigma2_2 = 0.01 + 0.9 * (0 - 1) < 0.
        let p = GarchParams {
            omega: 0.01,
            alpha: 0.9,
            ..Default::default()
        };
        let err = garch_variant_filter(GarchVariant::Cgarch, &p, &[0.0, 0.0, 0.0], Some(1.0))
            .unwrap_err();
        assert!(err.to_string().contains("step 2"), "{err}");
    }

    #[test]
    fn tgarch_evolves_sigma() {
        let p = GarchParams {
            omega: 0.1,
            alpha: 0.05,
            beta: 0.8,
            phi: 0.1,
            ..Default::default()
        };
        let s2 = garch_variant_filter(GarchVariant::Tgarch, &p, &[-0.5, 0.2, 0.0], Some(1.0)).unwrap();
        let s1 = 0.1 + 0.05 * -0.5 + 0.8 * 1.0 + 0.1 * -0.5;
        let s2_expected = 0.1 + 0.05 * 0.2 + 0.8 * s1;
        assert!((s2[1] - s1 * s1).abs() < 1e-14);
        assert!((s2[2] - s2_expected * s2_expected).abs() < 1e-14);
    }

    #[test]
    fn unknown_variant_is_error() {
        assert!("figarch".parse::<GarchVariant>().is_err());
        assert_eq!("GJR".parse::<GarchVariant>().unwrap(), GarchVariant::Gjr);
    }

    #[test]
    fn fit_rejects_short_and_degenerate() {
        assert!(garch11_fit(&sample_returns(50, 1)).is_err());
        let err = garch11_fit(&vec![0.0; 500]).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn fit_on_iid_data() {
        // With no ARCH effect the persistence beta is not identified, so only
        // the shock loading and the long-run level are checked.
        let r = sample_returns(20_000, 11);
        let fit = garch11_fit(&r).unwrap();
        let p = &fit.params;
        assert!(p.alpha < 0.02, "{p:?}");
        assert!((p.unconditional_variance() - 1.0).abs() < 0.1, "{p:?}");
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let truth = GarchParams::garch11(0.05, 0.1, 0.85).unwrap();
        let path = simulate_garch11(&truth, 5_000, 31, DEFAULT_BURN_IN).unwrap();
        let a = garch11_fit(&path.returns).unwrap().params;
        let scaled: Vec<f64> = path.returns.iter().map(|r| 10.0 * r).collect();
        let b = garch11_fit(&scaled).unwrap().params;
        assert!((a.alpha - b.alpha).abs() < 0.03, "{a:?} {b:?}");
        assert!((a.beta - b.beta).abs() < 0.03, "{a:?} {b:?}");
        assert!((b.omega / 100.0 - a.omega).abs() < 0.03, "{a:?} {b:?}");
    }
}
