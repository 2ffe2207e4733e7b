//! Classical volatility baselines: GARCH(1,1) estimation and forecasting,
//! GARCH-family filters, and the HAR-RV regression.

mod garch;
mod har;
mod params_text;
pub mod simplex;

pub(crate) use garch::garch11_next;
pub use garch::{
    garch11_filter, garch11_fit, garch11_forecast, garch11_log_likelihood, garch_variant_filter,
    sample_variance, GarchFit, GarchParams, GarchVariant, MIN_FIT_LEN,
};
pub use har::{
    har_feature_row, har_features, har_fit, har_fit_design, har_forecast, HarDesign, HarFeatures,
    HarParams, MIN_FIT_ROWS, MONTH, WEEK,
};
pub use params_text::{FittedModel, ParamMap};
