use crate::cells::{init_params, SigmaLstmGraph, SigmaLstmParams, VanillaLstmGraph, VanillaLstmParams};
use crate::error::{Error, Result};
use crate::simgen::{derive_seed, SplitMix64};

use super::config::{Alignment, TrainConfig};
use super::optim::{clip_grad_norm, Adam, CLIP_NORM};

/// Trained σ-LSTM weights and the per-epoch mean objective.
#[derive(Clone, Debug)]
pub struct SigmaTraining {
    pub params: SigmaLstmParams,
    /// Mean likelihood objective of each epoch (higher is better).
    pub history: Vec<f64>,
}

/// Trained LSTM baseline and the per-epoch mean squared error.
#[derive(Clone, Debug)]
pub struct VanillaTraining {
    pub params: VanillaLstmParams,
    pub history: Vec<f64>,
}

/// `(input start, target start)` of every non-overlapping window.
fn windows(n: usize, window: usize, lag: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut target = lag;
    while target + window <= n {
        out.push((target - lag, target));
        target += window;
    }
    out
}

fn diverged(epoch: usize, detail: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("training diverged at epoch {epoch}: {detail}"))
}

/// Maximize the mean Gaussian likelihood objective on scaled returns.
///
/// Returns are cut into non-overlapping windows, each run from a zero state
/// and followed by one Adam step with the gradient clipped to norm 5. Every
/// epoch draws fresh noise from a seed derived from `seed` and the epoch.
pub fn train_sigma_lstm(cfg: &TrainConfig, returns: &[f64], seed: u64) -> Result<SigmaTraining> {
    let lag = match cfg.alignment {
        Alignment::Filtering => 0,
        Alignment::Predictive => 1,
    };
    if returns.len() < cfg.window + lag {
        return Err(Error::Data(format!(
            "training series of {} points is shorter than the window ({})",
            returns.len(),
            cfg.window + lag
        )));
    }
    let hidden = cfg.hidden;
    let mut params = init_params(hidden, seed)?;
    let mut flat = params.to_flat();
    let graph = SigmaLstmGraph::new(hidden, cfg.window)?;
    let spans = windows(returns.len(), cfg.window, lag);
    let mut adam = Adam::new(flat.len(), cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    let noise_len = cfg.window * hidden;

    for epoch in 1..=cfg.epochs {
        let mut rng = SplitMix64::new(derive_seed(seed, epoch as u64));
        let mut total = 0.0;
        for &(input_start, target_start) in &spans {
            let inputs = &returns[input_start..input_start + cfg.window];
            let targets = &returns[target_start..target_start + cfg.window];
            let mut grad = vec![0.0; flat.len()];
            let mut objective = 0.0;
            for _ in 0..cfg.train_samples {
                let noise = rng.normals(noise_len);
                let (obj, g) = graph
                    .objective_and_gradient(&flat, inputs, targets, &noise)
                    .map_err(|e| diverged(epoch, e))?;
                objective += obj;
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            let k = cfg.train_samples as f64;
            objective /= k;
            // ascent on the objective = descent on its negation
            grad.iter_mut().for_each(|g| *g = -*g / k);
            if !objective.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(diverged(epoch, "non-finite objective or gradient"));
            }
            clip_grad_norm(&mut grad, CLIP_NORM);
            adam.step(&mut flat, &grad);
            total += objective;
        }
        let mean = total / spans.len() as f64;
        if !mean.is_finite() {
            return Err(diverged(epoch, "non-finite epoch objective"));
        }
        log::debug!("sigma-lstm epoch {epoch}: objective {mean:.6}");
        history.push(mean);
    }
    if cfg.epochs > 0 {
        params = SigmaLstmParams::from_flat(hidden, seed, &flat)
            .map_err(|e| diverged(cfg.epochs, e))?;
    }
    Ok(SigmaTraining { params, history })
}

/// Minimize next-step squared error of the LSTM baseline on a scaled series.
///
/// Window `k` feeds `x[s..s+L]` and is scored against `x[s+1..s+L+1]`.
pub fn train_vanilla_lstm(cfg: &TrainConfig, series: &[f64], seed: u64) -> Result<VanillaTraining> {
    if series.len() < cfg.window + 1 {
        return Err(Error::Data(format!(
            "training series of {} points is shorter than the window ({})",
            series.len(),
            cfg.window + 1
        )));
    }
    let mut params = VanillaLstmParams::init(cfg.hidden, seed)?;
    let mut flat = params.to_flat();
    let graph = VanillaLstmGraph::new(cfg.hidden, cfg.window)?;
    let spans = windows(series.len(), cfg.window, 1);
    let mut adam = Adam::new(flat.len(), cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for &(input_start, target_start) in &spans {
            let (mse, mut grad) = graph
                .mse_and_gradient(
                    &flat,
                    &series[input_start..input_start + cfg.window],
                    &series[target_start..target_start + cfg.window],
                )
                .map_err(|e| diverged(epoch, e))?;
            if !mse.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(diverged(epoch, "non-finite loss or gradient"));
            }
            clip_grad_norm(&mut grad, CLIP_NORM);
            adam.step(&mut flat, &grad);
            total += mse;
        }
        let mean = total / spans.len() as f64;
        log::debug!("lstm epoch {epoch}: mse {mean:.6e}");
        history.push(mean);
    }
    if cfg.epochs > 0 {
        params = VanillaLstmParams::from_flat(cfg.hidden, seed, &flat)
            .map_err(|e| diverged(cfg.epochs, e))?;
    }
    Ok(VanillaTraining { params, history })
}
