//! From intraday prices to a split, scaled daily dataset.

mod prices;
mod realized;
mod scaler;
mod split;

pub use prices::{load_prices, LoadedPrices, PriceSeries, TimestampFormat};
pub use realized::{daily_realized_vol, RvBuild, RvSeries, DEFAULT_MIN_INTRADAY_OBS};
pub use scaler::{Scaler, ScalerMode};
pub use split::{split, SplitSpec, Splits, MIN_TRAIN};
