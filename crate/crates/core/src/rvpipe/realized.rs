use std::io::Write;
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, NaiveDate};

use super::prices::PriceSeries;
use crate::error::{Error, Result};

/// Default minimum number of intraday prices for a day to be kept.
pub const DEFAULT_MIN_INTRADAY_OBS: usize = 30;

const SECONDS_PER_DAY: i64 = 86_400;

/// Daily realized volatility and close-to-close log returns.
///
/// `ret[0]` is `None` for series built from prices (no previous close).
#[derive(Clone, Debug, PartialEq)]
pub struct RvSeries {
    dates: Vec<NaiveDate>,
    rv: Vec<f64>,
    ret: Vec<Option<f64>>,
}

impl RvSeries {
    pub fn new(dates: Vec<NaiveDate>, rv: Vec<f64>, ret: Vec<Option<f64>>) -> Result<Self> {
        if dates.len() != rv.len() || dates.len() != ret.len() {
            return Err(Error::Data(format!(
                "misaligned RV series: {} dates, {} rv, {} ret",
                dates.len(),
                rv.len(),
                ret.len()
            )));
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!("dates not strictly increasing at row {}", i + 2)));
        }
        if let Some(i) = rv.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Data(format!("rv must be finite and >= 0 (row {})", i + 2)));
        }
        if ret.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Data("non-finite return in RV series".into()));
        }
        Ok(Self { dates, rv, ret })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rv(&self) -> &[f64] {
        &self.rv
    }

    pub fn ret(&self) -> &[Option<f64>] {
        &self.ret
    }

    pub fn len(&self) -> usize {
        self.rv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rv.is_empty()
    }

    pub fn slice(&self, range: Range<usize>) -> RvSeries {
        RvSeries {
            dates: self.dates[range.clone()].to_vec(),
            rv: self.rv[range.clone()].to_vec(),
            ret: self.ret[range].to_vec(),
        }
    }

    /// Drop leading rows without a return, so every remaining day has one.
    pub fn with_complete_returns(&self) -> Result<RvSeries> {
        let first = self
            .ret
            .iter()
            .position(Option::is_some)
            .ok_or_else(|| Error::Data("RV series has no returns".into()))?;
        let trimmed = self.slice(first..self.len());
        if trimmed.ret.iter().any(Option::is_none) {
            return Err(Error::Data("RV series has a missing return after the first row".into()));
        }
        Ok(trimmed)
    }

    /// Write `date,rv,ret` with 17 significant digits; a missing return is an
    /// empty field.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "date,rv,ret").map_err(io)?;
        for ((d, rv), ret) in self.dates.iter().zip(&self.rv).zip(&self.ret) {
            match ret {
                Some(r) => writeln!(w, "{},{:.16e},{:.16e}", d.format("%Y-%m-%d"), rv, r),
                None => writeln!(w, "{},{:.16e},", d.format("%Y-%m-%d"), rv),
            }
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<RvSeries> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| parse_err(path, 0, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| parse_err(path, 1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["date", "rv", "ret"] {
            return Err(parse_err(path, 1, "expected header 'date,rv,ret'".into()));
        }
        let (mut dates, mut rv, mut ret) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
                .map_err(|_| parse_err(path, line, format!("bad date '{}'", &record[0])))?;
            let v: f64 = record[1]
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad rv '{}'", &record[1])))?;
            let r = match &record[2] {
                "" => None,
                s => Some(
                    s.parse::<f64>()
                        .map_err(|_| parse_err(path, line, format!("bad ret '{s}'")))?,
                ),
            };
            dates.push(date);
            rv.push(v);
            ret.push(r);
        }
        RvSeries::new(dates, rv, ret)
    }
}

fn parse_err(path: &Path, line: usize, detail: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        detail,
    }
}

/// Result of [`daily_realized_vol`].
#[derive(Clone, Debug)]
pub struct RvBuild {
    pub series: RvSeries,
    /// Days discarded for having too few intraday observations.
    pub dropped_days: Vec<NaiveDate>,
}

/// Aggregate intraday prices into daily realized volatility.
///
/// Days are UTC calendar days. Within a day, `RV = sqrt(sum r_i^2)` over the
/// intraday log returns `r_i = ln(p_i / p_{i-1})`; returns never span two
/// days. The daily return is the log change between consecutive retained
/// closes. Days with fewer than `min_obs` prices are dropped.
pub fn daily_realized_vol(prices: &PriceSeries, min_obs: usize) -> Result<RvBuild> {
    let min_obs = min_obs.max(2);
    let ts = prices.timestamps();
    let px = prices.prices();

    let mut dates = Vec::new();
    let mut rv = Vec::new();
    let mut ret = Vec::new();
    let mut dropped_days = Vec::new();
    let mut prev_close: Option<f64> = None;

    let mut start = 0;
    while start < ts.len() {
        let day = ts[start].div_euclid(SECONDS_PER_DAY);
        let end = start + ts[start..].partition_point(|t| t.div_euclid(SECONDS_PER_DAY) == day);
        let date = DateTime::from_timestamp(day * SECONDS_PER_DAY, 0)
            .ok_or_else(|| Error::Data(format!("timestamp {} out of range", ts[start])))?
            .date_naive();
        let day_prices = &px[start..end];
        start = end;

        if day_prices.len() < min_obs {
            dropped_days.push(date);
            continue;
        }
        let sum_sq: f64 = day_prices
            .windows(2)
            .map(|w| {
                let r = (w[1] / w[0]).ln();
                r * r
            })
            .sum();
        let close = *day_prices.last().expect("non-empty day");
        dates.push(date);
        rv.push(sum_sq.sqrt());
        ret.push(prev_close.map(|c| (close / c).ln()));
        prev_close = Some(close);
    }

    if !dropped_days.is_empty() {
        log::warn!(
            "{} day(s) dropped with fewer than {min_obs} intraday observations",
            dropped_days.len()
        );
    }
    if dates.is_empty() {
        return Err(Error::Data(
            "no day has enough intraday observations to compute RV".into(),
        ));
    }
    Ok(RvBuild {
        series: RvSeries::new(dates, rv, ret)?,
        dropped_days,
    })
}
