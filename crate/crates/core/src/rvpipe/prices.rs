use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intraday price observations.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceSeries {
    timestamps: Vec<i64>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Timestamps must be strictly increasing epoch seconds; prices positive.
    pub fn new(timestamps: Vec<i64>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::Data(format!(
                "{} timestamps but {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Data(format!("non-positive price at index {i}")));
        }
        Ok(Self { timestamps, prices })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// How the `timestamp` column is encoded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimestampFormat {
    /// Integer epoch seconds if the field parses as one, ISO-8601 otherwise.
    #[default]
    Auto,
    EpochSeconds,
    Iso8601,
}

/// A loaded series plus the repairs applied while loading.
#[derive(Clone, Debug)]
pub struct LoadedPrices {
    pub series: PriceSeries,
    /// Rows whose timestamp repeated an earlier one (the last value is kept).
    pub duplicates: usize,
    /// Rows that arrived with a timestamp earlier than their predecessor.
    pub out_of_order: usize,
}

fn parse_iso(s: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    NAIVE
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|dt| dt.and_utc().timestamp())
}

fn parse_timestamp(s: &str, format: TimestampFormat) -> Option<i64> {
    match format {
        TimestampFormat::EpochSeconds => s.parse().ok(),
        TimestampFormat::Iso8601 => parse_iso(s),
        TimestampFormat::Auto => s.parse().ok().or_else(|| parse_iso(s)),
    }
}

/// Read a `timestamp,price` CSV.
///
/// Rows are sorted by time; when a timestamp repeats, the row appearing
/// last in the file wins. Both repairs are counted and logged.
pub fn load_prices(path: &Path, format: TimestampFormat) -> Result<LoadedPrices> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            detail: format!("missing '{name}' column"),
        })
    };
    let (ts_col, price_col) = (col("timestamp")?, col("price")?);

    let mut rows: Vec<(i64, f64)> = Vec::new();
    let mut out_of_order = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |detail: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            detail,
        };
        let ts_raw = record.get(ts_col).unwrap_or("");
        let price_raw = record.get(price_col).unwrap_or("");
        let ts = parse_timestamp(ts_raw, format)
            .ok_or_else(|| parse_err(format!("unparseable timestamp '{ts_raw}'")))?;
        let price: f64 = price_raw
            .parse()
            .map_err(|_| parse_err(format!("unparseable price '{price_raw}'")))?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(parse_err(format!("price must be positive, got '{price_raw}'")));
        }
        if rows.last().is_some_and(|&(prev, _)| ts < prev) {
            out_of_order += 1;
        }
        rows.push((ts, price));
    }

    // stable sort keeps file order among equal timestamps
    rows.sort_by_key(|&(ts, _)| ts);
    let mut timestamps: Vec<i64> = Vec::with_capacity(rows.len());
    let mut prices: Vec<f64> = Vec::with_capacity(rows.len());
    let mut duplicates = 0;
    for (ts, price) in rows {
        if timestamps.last() == Some(&ts) {
            *prices.last_mut().expect("parallel vectors") = price;
            duplicates += 1;
        } else {
            timestamps.push(ts);
            prices.push(price);
        }
    }
    if out_of_order > 0 {
        log::warn!("{}: {out_of_order} out-of-order rows sorted", path.display());
    }
    if duplicates > 0 {
        log::warn!("{}: {duplicates} duplicate timestamps collapsed", path.display());
    }

    Ok(LoadedPrices {
        series: PriceSeries::new(timestamps, prices)?,
        duplicates,
        out_of_order,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            detail: format!("{other:?}"),
        },
    }
}
