//! Recurrent cells: the σ-LSTM and a standard LSTM baseline.
//!
//! The σ-LSTM replaces the deterministic output gate with a zero-mean
//! Gaussian sample whose variance is a positive linear map of the squared
//! cell state, and reads volatility off the cell state as
//! `sigma2_t = mean(C_t)^2`. Training maximizes the Gaussian likelihood
//! objective `sum_t [-ln sigma2_t - r_t^2 / sigma2_t]`.
//!
//! Each cell has two evaluation routes: a direct `f64` pass used for
//! forecasting, and a recorded pass on a [`Tape`](crate::diffcore::Tape)
//! used for gradients. Tests check that they agree.

mod layout;
mod serialize;
mod sigma;
mod vanilla;

pub use serialize::{read_params_text, write_params_text, NetworkParams};
pub use sigma::{
    init_params, likelihood_term, record_sigma_lstm, sigma_lstm_forward,
    sigma_lstm_forward_aligned, sigma_lstm_step, NoiseSequence, SequenceOutput, SigmaLstmGraph,
    SigmaLstmParams, SigmaLstmState, SigmaSequenceNodes, StepOutput, VARIANCE_FLOOR,
};
pub use vanilla::{
    record_vanilla_lstm, vanilla_lstm_forward, vanilla_lstm_predict, VanillaLstmGraph,
    VanillaLstmParams,
};
