//! Price-series math: log returns, rolling annualized volatility, direction labels
//! and the price CSV format (`date,ticker,close`).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Trading days per year, the default annualization factor.
pub const TRADING_DAYS: f64 = 252.0;

/// Default trailing window for realized volatility.
pub const DEFAULT_VOL_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint<T> {
    pub date: NaiveDate,
    pub close: T,
}

impl<T: Scalar> PricePoint<T> {
    pub fn new(date: NaiveDate, close: T) -> Self {
        Self { date, close }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries<T> {
    pub entries: Vec<(NaiveDate, T)>,
}

impl<T: Scalar> ReturnSeries<T> {
    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|(_, r)| *r).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySeries<T> {
    pub entries: Vec<(NaiveDate, T)>,
    pub window: usize,
    pub annualization_factor: T,
}

/// How a binary direction label is derived from a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// 1 when the value strictly increased from the previous entry.
    Delta,
    /// 1 when the value itself is strictly positive (for returns).
    Sign,
}

fn check_increasing(dates: impl IntoIterator<Item = NaiveDate>) -> Result<()> {
    let mut prev: Option<NaiveDate> = None;
    for d in dates {
        if let Some(p) = prev {
            if d <= p {
                return Err(Error::Ordering { prev: p, next: d });
            }
        }
        prev = Some(d);
    }
    Ok(())
}

/// `ln(close_t / close_{t-1})` for each consecutive pair, dated at `t`.
pub fn log_returns<T: Scalar>(prices: &[PricePoint<T>]) -> Result<ReturnSeries<T>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log returns need at least 2 prices, got {}",
            prices.len()
        )));
    }
    if let Some(bad) = prices.iter().find(|p| !(p.close > T::zero()) || !p.close.is_finite()) {
        return Err(Error::InvalidPrice {
            date: bad.date,
            close: bad.close.as_f64(),
        });
    }
    check_increasing(prices.iter().map(|p| p.date))?;
    let entries = prices
        .windows(2)
        .map(|w| (w[1].date, (w[1].close / w[0].close).ln()))
        .collect();
    Ok(ReturnSeries { entries })
}

/// Trailing-window population standard deviation of returns, scaled by
/// `sqrt(annualization_factor)`. The first entry is dated at the last return of
/// the first full window.
pub fn rolling_volatility<T: Scalar>(
    returns: &ReturnSeries<T>,
    window: usize,
    annualization_factor: T,
) -> Result<VolatilitySeries<T>> {
    if window < 2 {
        return Err(Error::InvalidWindow(window));
    }
    if !(annualization_factor > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "annualization factor must be positive, got {annualization_factor}"
        )));
    }
    if returns.len() < window {
        return Err(Error::InsufficientData(format!(
            "{} returns is shorter than the {window}-day window",
            returns.len()
        )));
    }
    let n = T::from_count(window);
    let scale = annualization_factor.sqrt();
    let entries = returns
        .entries
        .windows(window)
        .map(|w| {
            let mean = w.iter().map(|(_, r)| *r).sum::<T>() / n;
            let var = w
                .iter()
                .map(|(_, r)| {
                    let d = *r - mean;
                    d * d
                })
                .sum::<T>()
                / n;
            (w[window - 1].0, var.sqrt() * scale)
        })
        .collect();
    Ok(VolatilitySeries {
        entries,
        window,
        annualization_factor,
    })
}

/// Binary labels; ties map to 0.
///
/// `Delta` yields one label per consecutive pair (dated at the later entry).
/// `Sign` labels every entry by its own sign, so the output has the input's length.
pub fn direction_labels<T: Scalar>(series: &[(NaiveDate, T)], mode: LabelMode) -> Result<Vec<(NaiveDate, u8)>> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "direction labels need at least 2 entries, got {}",
            series.len()
        )));
    }
    let labels = match mode {
        LabelMode::Delta => series.windows(2).map(|w| (w[1].0, u8::from(w[1].1 > w[0].1))).collect(),
        LabelMode::Sign => series.iter().map(|(d, v)| (*d, u8::from(*v > T::zero()))).collect(),
    };
    Ok(labels)
}

/// Weighted sum of per-ticker log returns on the dates every weighted ticker shares.
///
/// Weights are renormalized over the tickers that have prices; tickers without a
/// weight are ignored.
pub fn sector_returns<T: Scalar>(
    prices: &BTreeMap<String, Vec<PricePoint<T>>>,
    weights: &BTreeMap<String, T>,
) -> Result<ReturnSeries<T>> {
    let mut per_ticker = Vec::new();
    for (ticker, series) in prices {
        let Some(w) = weights.get(ticker) else { continue };
        if *w < T::zero() {
            return Err(Error::InvalidWeight {
                key: ticker.clone(),
                weight: w.as_f64(),
            });
        }
        let r = log_returns(series)?;
        let map: BTreeMap<NaiveDate, T> = r.entries.into_iter().collect();
        per_ticker.push((*w, map));
    }
    if per_ticker.is_empty() {
        return Err(Error::Alignment("no priced ticker carries a sector weight".into()));
    }
    let total: T = per_ticker.iter().map(|(w, _)| *w).sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidArgument("sector weights sum to zero".into()));
    }
    let (_, first) = &per_ticker[0];
    let entries: Vec<(NaiveDate, T)> = first
        .keys()
        .filter(|d| per_ticker.iter().all(|(_, m)| m.contains_key(d)))
        .map(|d| {
            let r = per_ticker.iter().map(|(w, m)| *w * m[d]).sum::<T>() / total;
            (*d, r)
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::Alignment("tickers share no return dates".into()));
    }
    Ok(ReturnSeries { entries })
}

/// Parse `date,ticker,close` rows into per-ticker series sorted by date.
pub fn parse_prices_csv<T: Scalar, R: Read>(reader: R) -> Result<BTreeMap<String, Vec<PricePoint<T>>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = ["date", "ticker", "close"];
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `date,ticker,close`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out: BTreeMap<String, Vec<PricePoint<T>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date `{}`: {e}", &rec[0])))?;
        let ticker = rec[1].to_string();
        if ticker.is_empty() {
            return Err(parse_err("empty ticker".into()));
        }
        let close: T = rec[2]
            .parse()
            .map_err(|_| parse_err(format!("bad close `{}`", &rec[2])))?;
        if !(close > T::zero()) || !close.is_finite() {
            return Err(Error::InvalidPrice {
                date,
                close: close.as_f64(),
            });
        }
        out.entry(ticker).or_default().push(PricePoint { date, close });
    }
    for series in out.values_mut() {
        series.sort_by_key(|p| p.date);
        check_increasing(series.iter().map(|p| p.date))?;
    }
    Ok(out)
}

/// Write per-ticker series as `date,ticker,close`, ordered by date then ticker.
pub fn write_prices_csv<T: Scalar, W: Write>(prices: &BTreeMap<String, Vec<PricePoint<T>>>, writer: W) -> Result<()> {
    let mut rows: Vec<(NaiveDate, &str, T)> = prices
        .iter()
        .flat_map(|(t, s)| s.iter().map(move |p| (p.date, t.as_str(), p.close)))
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "ticker", "close"])?;
    for (d, t, c) in rows {
        w.write_record([d.to_string(), t.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
