//! Discrete probability measures, hype detection and the hype-adjusted change of
//! measure `P -> P^a` through an explicit Radon-Nikodym density `Z = dP^a/dP`.
//!
//! `Z` is strictly positive (so `P` and `P^a` share null sets) and normalized so
//! that `E_P[Z] = 1`. Expectations under `P^a` can then be computed either
//! directly or as `E_P[X Z]`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::PricePoint;
use crate::news_ingest::{Corpus, TickerWeightTable};
use crate::scalar::{stable_sum, Scalar};

pub const DEFAULT_KAPPA: f64 = 0.2;
pub const DEFAULT_HYPE_WINDOW: usize = 5;
pub const DEFAULT_HYPE_BASELINE: usize = 60;
pub const DEFAULT_HYPE_THRESHOLD: f64 = 0.05;

/// Tolerance on `Σ p = 1` when constructing a measure.
pub const MEASURE_TOLERANCE: f64 = 1e-12;
/// Tolerance on `E_P[Z] = 1` accepted by [`change_measure`].
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// A probability vector over named states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DiscreteMeasure<T> {
    states: Vec<String>,
    probs: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(states: Vec<String>, probs: Vec<T>) -> Result<Self> {
        Self::with_tolerance(states, probs, T::tol(MEASURE_TOLERANCE))
    }

    fn with_tolerance(states: Vec<String>, probs: Vec<T>, tol: T) -> Result<Self> {
        if states.is_empty() || states.len() != probs.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &states {
            if !seen.insert(s) {
                return Err(Error::InvalidMeasure(format!("duplicate state {s}")));
            }
        }
        if let Some((s, p)) = states
            .iter()
            .zip(&probs)
            .find(|(_, p)| !(**p >= T::zero()) || !p.is_finite())
        {
            return Err(Error::InvalidMeasure(format!("probability {p} on {s}")));
        }
        let total = stable_sum(probs.iter().copied());
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidMeasure(format!("probabilities sum to {total}")));
        }
        Ok(Self { states, probs })
    }

    /// Normalize nonnegative masses into a measure.
    pub fn from_masses(states: Vec<String>, masses: Vec<T>) -> Result<Self> {
        let total = stable_sum(masses.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::InvalidMeasure("masses sum to zero".into()));
        }
        Self::new(states, masses.into_iter().map(|m| m / total).collect())
    }

    /// The Up/Level/Down measure.
    pub fn three_state(up: T, level: T, down: T) -> Result<Self> {
        Self::new(vec![UP.into(), LEVEL.into(), DOWN.into()], vec![up, level, down])
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, state: &str) -> Option<T> {
        self.index_of(state).map(|i| self.probs[i])
    }

    pub fn index_of(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub const UP: &str = "Up";
pub const LEVEL: &str = "Level";
pub const DOWN: &str = "Down";

/// Radon-Nikodym weights `z_i = P^a(ω_i) / P(ω_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RNWeights<T> {
    pub states: Vec<String>,
    pub z: Vec<T>,
}

impl<T: Scalar> RNWeights<T> {
    /// `Z ≡ 1` on the states of `p`.
    pub fn identity(p: &DiscreteMeasure<T>) -> Self {
        Self {
            states: p.states.clone(),
            z: vec![T::one(); p.len()],
        }
    }

    /// `E_P[Z]`; states must be aligned with `p`.
    pub fn mean_under(&self, p: &DiscreteMeasure<T>) -> Result<T> {
        check_aligned(&p.states, &self.states)?;
        Ok(stable_sum(p.probs.iter().zip(&self.z).map(|(a, b)| *a * *b)))
    }

    pub fn reciprocal(&self) -> Self {
        Self {
            states: self.states.clone(),
            z: self.z.iter().map(|z| z.recip()).collect(),
        }
    }

    pub fn get(&self, state: &str) -> Option<T> {
        self.states.iter().position(|s| s == state).map(|i| self.z[i])
    }
}

fn check_aligned(a: &[String], b: &[String]) -> Result<()> {
    if a != b {
        return Err(Error::Alignment(format!(
            "state lists differ: [{}] vs [{}]",
            a.join(", "),
            b.join(", ")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypeState {
    Overhyped,
    Neutral,
    Underhyped,
}

impl fmt::Display for HypeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypeState::Overhyped => "overhyped",
            HypeState::Neutral => "neutral",
            HypeState::Underhyped => "underhyped",
        })
    }
}

impl FromStr for HypeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overhyped" => Ok(Self::Overhyped),
            "neutral" => Ok(Self::Neutral),
            "underhyped" => Ok(Self::Underhyped),
            other => Err(Error::InvalidArgument(format!("unknown hype state `{other}`"))),
        }
    }
}

impl HypeState {
    /// Overhyped when the sentiment move is larger in magnitude than the price
    /// move by more than `threshold`, underhyped when it is smaller by more than
    /// `threshold`.
    pub fn classify<T: Scalar>(sentiment_move: T, price_move: T, threshold: T) -> Self {
        let gap = sentiment_move.abs() - price_move.abs();
        if gap > threshold {
            Self::Overhyped
        } else if gap < -threshold {
            Self::Underhyped
        } else {
            Self::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypeConfig<T> {
    /// Recent window, in observations.
    pub window: usize,
    /// Baseline length preceding the window, in observations.
    pub baseline: usize,
    pub threshold: T,
    /// Smallest denominator used for the relative sentiment move, so that moves
    /// off a near-zero sentiment level stay finite.
    pub sentiment_floor: T,
}

impl<T: Scalar> Default for HypeConfig<T> {
    fn default() -> Self {
        Self {
            window: DEFAULT_HYPE_WINDOW,
            baseline: DEFAULT_HYPE_BASELINE,
            threshold: T::lit(DEFAULT_HYPE_THRESHOLD),
            sentiment_floor: T::lit(crate::sentiment_engine::DEFAULT_NEUTRAL_BAND),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TickerHype<T> {
    pub ticker: String,
    pub news_spike_ratio: T,
    pub sentiment_move: T,
    pub price_move: T,
    pub hype_state: HypeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HypeReport<T> {
    pub tickers: Vec<TickerHype<T>>,
}

impl<T: Scalar> HypeReport<T> {
    pub fn states(&self) -> BTreeMap<String, HypeState> {
        self.tickers.iter().map(|t| (t.ticker.clone(), t.hype_state)).collect()
    }

    pub fn get(&self, ticker: &str) -> Option<&TickerHype<T>> {
        self.tickers.iter().find(|t| t.ticker == ticker)
    }
}

/// `(current - previous) / max(|previous|, floor)`, or 0 when both are 0.
fn relative_move<T: Scalar>(previous: T, current: T, floor: T) -> T {
    let denom = previous.abs().max(floor);
    if denom > T::zero() {
        (current - previous) / denom
    } else {
        T::zero()
    }
}

fn mean_of<T: Scalar>(values: impl Iterator<Item = T>) -> Option<T> {
    let mut n = 0usize;
    let mut total = T::zero();
    for v in values {
        total = total + v;
        n += 1;
    }
    (n > 0).then(|| total / T::from_count(n))
}

/// Classify each priced ticker.
///
/// The ticker's price dates form its time axis. With `W = window`:
/// * `news_spike_ratio` = mean daily article count over the last `W` dates ÷
///   mean over the up-to-`baseline` dates before them (0 if that baseline has no news);
/// * `price_move` and `sentiment_move` compare the mean level over the last `W`
///   dates with the mean over the `W` dates before them. Sentiment dates absent
///   from a ticker's series are skipped.
pub fn detect_hype<T: Scalar>(
    corpus: &Corpus<T>,
    prices: &BTreeMap<String, Vec<PricePoint<T>>>,
    sentiment: &BTreeMap<String, BTreeMap<NaiveDate, T>>,
    config: &HypeConfig<T>,
) -> Result<HypeReport<T>> {
    let HypeConfig {
        window,
        baseline,
        threshold,
        sentiment_floor,
    } = *config;
    if window < 1 || baseline < window {
        return Err(Error::InvalidArgument(format!(
            "need baseline >= window >= 1, got window {window}, baseline {baseline}"
        )));
    }
    if !(threshold > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let counts = corpus.daily_counts();
    let empty = BTreeMap::new();
    let mut tickers = Vec::with_capacity(prices.len());
    for (ticker, series) in prices {
        let n = series.len();
        if n < 2 * window {
            return Err(Error::InsufficientData(format!(
                "{ticker} has {n} observations; a {window}-day window needs {}",
                2 * window
            )));
        }
        let dates: Vec<NaiveDate> = series.iter().map(|p| p.date).collect();
        let recent = &dates[n - window..];
        let prior = &dates[n - 2 * window..n - window];
        let base_start = (n - window).saturating_sub(baseline);
        let base = &dates[base_start..n - window];

        let count_on = |d: &NaiveDate| T::from_count(counts.get(&(*d, ticker.clone())).copied().unwrap_or(0));
        let recent_news = mean_of(recent.iter().map(count_on)).unwrap_or_else(T::zero);
        let base_news = mean_of(base.iter().map(count_on)).unwrap_or_else(T::zero);
        let news_spike_ratio = if base_news > T::zero() {
            recent_news / base_news
        } else {
            T::zero()
        };

        let closes = &series[..];
        let recent_px = mean_of(closes[n - window..].iter().map(|p| p.close)).unwrap_or_else(T::zero);
        let prior_px = mean_of(closes[n - 2 * window..n - window].iter().map(|p| p.close)).unwrap_or_else(T::zero);
        let price_move = relative_move(prior_px, recent_px, T::zero());

        let sent = sentiment.get(ticker).unwrap_or(&empty);
        let recent_s = mean_of(recent.iter().filter_map(|d| sent.get(d).copied()));
        let prior_s = mean_of(prior.iter().filter_map(|d| sent.get(d).copied()));
        let sentiment_move = match (prior_s, recent_s) {
            (Some(a), Some(b)) => relative_move(a, b, sentiment_floor),
            _ => T::zero(),
        };

        tickers.push(TickerHype {
            ticker: ticker.clone(),
            news_spike_ratio,
            sentiment_move,
            price_move,
            hype_state: HypeState::classify(sentiment_move, price_move, threshold),
        });
    }
    Ok(HypeReport { tickers })
}

/// Density that shrinks overhyped states to `1 - kappa`, inflates underhyped ones
/// to `1 + kappa`, leaves other states at 1, and solves the `level` state's weight
/// from `E_P[Z] = 1`. States absent from `hype` are neutral; the level state's own
/// hype classification is ignored.
pub fn build_rn_weights<T: Scalar>(
    p: &DiscreteMeasure<T>,
    hype: &BTreeMap<String, HypeState>,
    level: &str,
    kappa: T,
) -> Result<RNWeights<T>> {
    if !(kappa > T::zero() && kappa < T::one()) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let level_idx = p
        .index_of(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level state {level} not in measure")))?;
    if let Some(unknown) = hype.keys().find(|k| p.index_of(k).is_none()) {
        return Err(Error::Alignment(format!(
            "hype state given for unknown state {unknown}"
        )));
    }
    let p_level = p.probs[level_idx];
    if !(p_level > T::zero()) {
        return Err(Error::CannotBalance(level.to_string()));
    }
    let mut z: Vec<T> = p
        .states
        .iter()
        .map(|s| match hype.get(s) {
            Some(HypeState::Overhyped) => T::one() - kappa,
            Some(HypeState::Underhyped) => T::one() + kappa,
            _ => T::one(),
        })
        .collect();
    let others = stable_sum(
        p.probs
            .iter()
            .zip(&z)
            .enumerate()
            .filter(|(i, _)| *i != level_idx)
            .map(|(_, (p, z))| *p * *z),
    );
    let z_level = (T::one() - others) / p_level;
    if !(z_level > T::zero()) {
        return Err(Error::EquivalenceViolated(format!(
            "balancing weight on {level} would be {z_level}"
        )));
    }
    z[level_idx] = z_level;
    let weights = RNWeights {
        states: p.states.clone(),
        z,
    };
    let mean = weights.mean_under(p)?;
    if (mean - T::one()).abs() > T::tol(MEASURE_TOLERANCE) {
        return Err(Error::Unnormalized(mean.as_f64()));
    }
    Ok(weights)
}

/// `P^a(ω_i) = z_i P(ω_i)`.
pub fn change_measure<T: Scalar>(p: &DiscreteMeasure<T>, z: &RNWeights<T>) -> Result<DiscreteMeasure<T>> {
    check_aligned(&p.states, &z.states)?;
    if let Some((s, w)) = z
        .states
        .iter()
        .zip(&z.z)
        .find(|(_, w)| !(**w > T::zero()) || !w.is_finite())
    {
        return Err(Error::EquivalenceViolated(format!("z = {w} on {s}")));
    }
    let mean = z.mean_under(p)?;
    let tol = T::tol(DENSITY_TOLERANCE);
    if (mean - T::one()).abs() > tol {
        return Err(Error::Unnormalized(mean.as_f64()));
    }
    let probs = p.probs.iter().zip(&z.z).map(|(a, b)| *a * *b).collect();
    DiscreteMeasure::with_tolerance(p.states.clone(), probs, tol)
}

/// `Σ_i P(ω_i) X(ω_i)`.
pub fn expectation<T: Scalar>(measure: &DiscreteMeasure<T>, x: &BTreeMap<String, T>) -> Result<T> {
    let terms = measure
        .states
        .iter()
        .zip(&measure.probs)
        .map(|(s, p)| x.get(s).map(|v| *p * *v).ok_or_else(|| Error::Domain(s.clone())))
        .collect::<Result<Vec<T>>>()?;
    Ok(stable_sum(terms))
}

/// `E_P[X Z]`, the adjusted expectation computed under the original measure.
pub fn expectation_weighted<T: Scalar>(p: &DiscreteMeasure<T>, x: &BTreeMap<String, T>, z: &RNWeights<T>) -> Result<T> {
    check_aligned(&p.states, &z.states)?;
    let xz = p
        .states
        .iter()
        .zip(&z.z)
        .map(|(s, w)| {
            x.get(s)
                .map(|v| (s.clone(), *v * *w))
                .ok_or_else(|| Error::Domain(s.clone()))
        })
        .collect::<Result<BTreeMap<String, T>>>()?;
    expectation(p, &xz)
}

/// Two-epoch conditional expectation under `P^a`:
/// `E^a[X_t | F_s] = E_P[X_t Z_t | F_s] / Z_s`, where `conditional` is `P`
/// restricted to the time-`t` states reachable from the given time-`s` node
/// and `z_s` is the density at that node.
pub fn conditional_expectation_adjusted<T: Scalar>(
    x_t: &BTreeMap<String, T>,
    z_t: &RNWeights<T>,
    z_s: T,
    conditional: &DiscreteMeasure<T>,
) -> Result<T> {
    if !(z_s > T::zero()) {
        return Err(Error::EquivalenceViolated(format!("Z(s) = {z_s}")));
    }
    let restricted = conditional
        .states
        .iter()
        .map(|s| {
            z_t.get(s)
                .ok_or_else(|| Error::Alignment(format!("no Z(t) for state {s}")))
        })
        .collect::<Result<Vec<T>>>()?;
    let z = RNWeights {
        states: conditional.states.clone(),
        z: restricted,
    };
    Ok(expectation_weighted(conditional, x_t, &z)? / z_s)
}

/// The sector reweighting: news shares as `P`, capital shares as the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SectorReweight<T> {
    /// `capital_weight / news_weight` per ticker.
    pub z: BTreeMap<String, T>,
    /// `z * news_weight`, renormalized to sum to 1.
    pub adjusted: BTreeMap<String, T>,
}

/// Reweight empirical news shares toward capital shares.
pub fn sector_reweight<T: Scalar>(
    news_weights: &BTreeMap<String, T>,
    capital_weights: &BTreeMap<String, T>,
) -> Result<SectorReweight<T>> {
    if news_weights.len() != capital_weights.len() || news_weights.keys().any(|k| !capital_weights.contains_key(k)) {
        return Err(Error::Alignment(
            "news and capital weights cover different tickers".into(),
        ));
    }
    let mut z = BTreeMap::new();
    let mut mass = BTreeMap::new();
    for (ticker, n) in news_weights {
        let c = capital_weights[ticker];
        if !(*n > T::zero()) {
            return Err(Error::EquivalenceViolated(format!("{ticker} has news weight {n}")));
        }
        if !(c > T::zero()) {
            return Err(Error::EquivalenceViolated(format!("{ticker} has capital weight {c}")));
        }
        let zi = c / *n;
        z.insert(ticker.clone(), zi);
        mass.insert(ticker.clone(), zi * *n);
    }
    let total = stable_sum(mass.values().copied());
    let adjusted = mass.into_iter().map(|(k, m)| (k, m / total)).collect();
    Ok(SectorReweight { z, adjusted })
}

/// [`sector_reweight`] on the table's own columns.
pub fn hype_adjusted_ticker_weights<T: Scalar>(table: &TickerWeightTable<T>) -> Result<SectorReweight<T>> {
    sector_reweight(&table.news_weights(), &table.capital_weights())
}

/// `ticker,news_spike_ratio,sentiment_move,price_move,hype_state,z`; `z` is empty
/// for tickers without a density value.
pub fn write_hype_csv<T: Scalar, W: Write>(report: &HypeReport<T>, z: &BTreeMap<String, T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "ticker",
        "news_spike_ratio",
        "sentiment_move",
        "price_move",
        "hype_state",
        "z",
    ])?;
    for t in &report.tickers {
        w.write_record([
            t.ticker.clone(),
            t.news_spike_ratio.to_string(),
            t.sentiment_move.to_string(),
            t.price_move.to_string(),
            t.hype_state.to_string(),
            z.get(&t.ticker).map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
