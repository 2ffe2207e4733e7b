//! Volatility forecasting with a stochastic-output-gate LSTM cell.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffcore`]: a small reverse-mode differentiation tape over dense tensors.
//! - [`cells`]: the σ-LSTM cell, its Gaussian likelihood objective, and a
//!   standard LSTM baseline.
//! - [`econo`]: GARCH(1,1) estimation, GARCH-family filters and HAR-RV.
//! - [`rvpipe`]: price ingestion, daily realized volatility, scaling, splits.
//! - [`simgen`]: a portable seeded generator and GARCH path simulation.
//! - [`harness`]: training loops, rolling forecasts, grid search and
//!   config-driven experiments.

pub mod cells;
pub mod diffcore;
pub mod econo;
pub mod error;
pub mod harness;
pub mod rvpipe;
pub mod simgen;

pub use cells::{
    init_params, sigma_lstm_forward, sigma_lstm_step, NoiseSequence, SigmaLstmParams,
    SigmaLstmState, StepOutput, VanillaLstmParams,
};
pub use diffcore::{NodeId, Tape, Tensor};
pub use econo::{GarchParams, GarchVariant, HarParams};
pub use error::{Error, ErrorClass, Result};
pub use harness::{ExperimentConfig, ForecastReport};
pub use rvpipe::{PriceSeries, RvSeries, Scaler, ScalerMode, SplitSpec};
pub use simgen::{SimPath, SplitMix64};
