//! Seeded synthetic data.
//!
//! Every random draw in the crate comes from [`SplitMix64`], a 64-bit
//! counter-based generator whose full definition fits in a few lines, and
//! normals come from a fixed rational approximation of the inverse normal
//! CDF applied to its uniform stream. Both are plain arithmetic, so a port
//! to another language reproduces the same paths.
//!
//! Test vector (seed 0): the first five `next_u64` outputs are
//! `0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f,
//! 0xf88bb8a8724c81ec, 0x1b39896a51a8749b`, and the first five
//! `next_normal` outputs are `1.1917013110429528, -0.17248532914549122,
//! -1.9360012896968122, 1.893916877143776, -1.24619344872094`.

use std::io::Write;
use std::path::Path;

use chrono::{Days, NaiveDate};

use crate::econo::{garch11_next, GarchParams};
use crate::error::{Error, Result};
use crate::rvpipe::RvSeries;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 (Steele, Lea & Flood).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1): the top 53 bits, offset by half
    /// an ulp so neither endpoint occurs.
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_f64())
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

/// Derive an independent seed for sub-stream `stream` of `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut g = SplitMix64::new(base ^ stream.wrapping_mul(GOLDEN_GAMMA).rotate_left(17));
    g.next_u64()
}

// Acklam's rational approximation; relative error below 1.15e-9 on (0, 1).
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Inverse standard normal CDF for `p` in (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// A simulated GARCH(1,1) return path with its true conditional variances.
#[derive(Clone, Debug, PartialEq)]
pub struct SimPath {
    pub returns: Vec<f64>,
    pub true_sigma2: Vec<f64>,
    pub params: GarchParams,
    pub seed: u64,
}

pub const DEFAULT_BURN_IN: usize = 1_000;

/// Simulate `n` returns of a zero-mean Gaussian GARCH(1,1), discarding the
/// first `burn_in` steps. The recursion starts at the unconditional variance.
pub fn simulate_garch11(p: &GarchParams, n: usize, seed: u64, burn_in: usize) -> Result<SimPath> {
    p.validate_garch11()?;
    if n == 0 {
        return Err(Error::InvalidArgument("simulation length must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut s2 = p.unconditional_variance();
    let mut returns = Vec::with_capacity(n);
    let mut true_sigma2 = Vec::with_capacity(n);
    for step in 0..burn_in + n {
        let r = s2.sqrt() * rng.next_normal();
        if step >= burn_in {
            returns.push(r);
            true_sigma2.push(s2);
        }
        s2 = garch11_next(p, r, s2);
    }
    Ok(SimPath {
        returns,
        true_sigma2,
        params: p.clone(),
        seed,
    })
}

/// Synthetic daily RV: `rv_t = sigma_t * exp(eta_t)`, `eta_t ~ N(0, noise_scale^2)`.
pub fn simulate_rv_from_path(path: &SimPath, noise_scale: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "RV noise scale must be finite and >= 0, got {noise_scale}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    Ok(path
        .true_sigma2
        .iter()
        .map(|s2| {
            let eta = noise_scale * rng.next_normal();
            s2.sqrt() * eta.exp()
        })
        .collect())
}

/// First calendar date assigned to simulated series.
pub fn simulation_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

impl SimPath {
    pub fn true_sigma(&self) -> Vec<f64> {
        self.true_sigma2.iter().map(|v| v.sqrt()).collect()
    }

    /// Package the path and a synthetic RV series on consecutive calendar
    /// days, in the RV CSV layout.
    pub fn to_rv_series(&self, rv: &[f64]) -> Result<RvSeries> {
        if rv.len() != self.returns.len() {
            return Err(Error::InvalidArgument(format!(
                "rv has {} points, path has {}",
                rv.len(),
                self.returns.len()
            )));
        }
        let start = simulation_start_date();
        let dates = (0..rv.len())
            .map(|i| start + Days::new(i as u64))
            .collect();
        RvSeries::new(dates, rv.to_vec(), self.returns.iter().map(|&r| Some(r)).collect())
    }

    /// Write `t,ret,sigma2` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "t,ret,sigma2").map_err(io)?;
        for (i, (r, s2)) in self.returns.iter().zip(&self.true_sigma2).enumerate() {
            writeln!(w, "{},{:.16e},{:.16e}", i + 1, r, s2).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
