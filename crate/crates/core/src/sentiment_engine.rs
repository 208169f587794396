//! The sentiment-score ladder.
//!
//! Per-article scores are source-corrected (`alpha * s + beta`, clamped to the
//! score scale), squashed to zero inside the neutral band, averaged per ticker
//! and day, aggregated across tickers with component weights, and finally
//! carried through time by the sign-shift recursion
//!
//! ```text
//! SentAll_d = w_today * Sent_d
//!           - [Sent_d < 0 < Sent_{d-1}]      * w_past1 * SentAll_{d-1}
//!           + [Sent_{d-1} < 0 < Sent_d]      * w_past2 * SentAll_{d-1}
//!           + [Sent_d * Sent_{d-1} >= 0]     * w_past3 * SentAll_{d-1}
//! ```
//!
//! with `SentAll_1 = Sent_1`. The running product of the past weights that
//! fired since the last reset is tracked; once it drops below `memory_cutoff`
//! the history is discarded and the recursion restarts at `w_today * Sent_d`.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::news_ingest::{Corpus, NewsArticle, SCORE_BOUND};
use crate::scalar::Scalar;

pub const DEFAULT_NEUTRAL_BAND: f64 = 0.05;
pub const DEFAULT_MEMORY_CUTOFF: f64 = 0.005;

/// Positive/negative/neutral article counts for one day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DailyCounts {
    pub n_pos: u64,
    pub n_neg: u64,
    pub n_neutral: u64,
}

/// Affine correction for one news outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceAdjustment<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> Default for SourceAdjustment<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SentimentParams<T> {
    pub w_today: T,
    /// Carry weight when sentiment flips positive to negative (enters with a minus sign).
    pub w_past1: T,
    /// Carry weight when sentiment flips negative to positive.
    pub w_past2: T,
    /// Carry weight when the sign does not change.
    pub w_past3: T,
    pub neutral_band: T,
    pub memory_cutoff: T,
    /// Per-source corrections; unlisted sources use `alpha = 1, beta = 0`.
    #[serde(default)]
    pub sources: BTreeMap<String, SourceAdjustment<T>>,
}

impl<T: Scalar> Default for SentimentParams<T> {
    fn default() -> Self {
        Self {
            w_today: T::one(),
            w_past1: T::zero(),
            w_past2: T::zero(),
            w_past3: T::zero(),
            neutral_band: T::lit(DEFAULT_NEUTRAL_BAND),
            memory_cutoff: T::lit(DEFAULT_MEMORY_CUTOFF),
            sources: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> SentimentParams<T> {
    /// Recursion weights only; band, cutoff and sources at their defaults.
    pub fn with_weights(w_today: T, w_past1: T, w_past2: T, w_past3: T) -> Self {
        Self {
            w_today,
            w_past1,
            w_past2,
            w_past3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_today", self.w_today),
            ("w_past1", self.w_past1),
            ("w_past2", self.w_past2),
            ("w_past3", self.w_past3),
        ] {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidWeight {
                    key: name.into(),
                    weight: w.as_f64(),
                });
            }
        }
        if !(self.neutral_band >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "neutral band must be nonnegative, got {}",
                self.neutral_band
            )));
        }
        if !(self.memory_cutoff > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "memory cutoff must be positive, got {}",
                self.memory_cutoff
            )));
        }
        Ok(())
    }

    pub fn source_adjustment(&self, source: &str) -> SourceAdjustment<T> {
        self.sources.get(source).copied().unwrap_or_default()
    }

    /// The full grid over the four recursion weights at the given values,
    /// iterated with `w_past3` fastest. `template` supplies band, cutoff and sources.
    pub fn grid(template: &Self, w_today: &[T], w_past1: &[T], w_past2: &[T], w_past3: &[T]) -> Vec<Self> {
        let mut out = Vec::new();
        for &a in w_today {
            for &b in w_past1 {
                for &c in w_past2 {
                    for &d in w_past3 {
                        out.push(Self {
                            w_today: a,
                            w_past1: b,
                            w_past2: c,
                            w_past3: d,
                            ..template.clone()
                        });
                    }
                }
            }
        }
        out
    }

    /// `0.0, 0.1, ..., 1.0`, the default per-weight search resolution.
    pub fn unit_steps() -> Vec<T> {
        (0..=10).map(|k| T::lit(k as f64 / 10.0)).collect()
    }
}

/// Count-ratio score `(pos - neg) / (pos + neutral - neg + 3)`, evaluated literally.
pub fn baseline_sentiment<T: Scalar>(counts: DailyCounts) -> Result<T> {
    let pos = counts.n_pos as f64;
    let neg = counts.n_neg as f64;
    let neutral = counts.n_neutral as f64;
    let denom = pos + neutral - neg + 3.0;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok(T::lit(pos - neg) / T::lit(denom))
}

/// Scores strictly inside `(-band, band)` become 0.
pub fn neutral_band<T: Scalar>(score: T, band: T) -> T {
    if score.abs() < band {
        T::zero()
    } else {
        score
    }
}

/// `alpha * score + beta`, clamped to the score scale.
pub fn source_adjust<T: Scalar>(score: T, alpha: T, beta: T) -> T {
    let bound = T::lit(SCORE_BOUND);
    (alpha * score + beta).max(-bound).min(bound)
}

fn article_score<T: Scalar>(a: &NewsArticle<T>, params: &SentimentParams<T>) -> T {
    let adj = params.source_adjustment(&a.source);
    neutral_band(source_adjust(a.score, adj.alpha, adj.beta), params.neutral_band)
}

/// Mean of corrected, banded article scores; `None` when there are no articles.
pub fn ticker_daily_score<T: Scalar>(articles: &[&NewsArticle<T>], params: &SentimentParams<T>) -> Option<T> {
    if articles.is_empty() {
        return None;
    }
    let total: T = articles.iter().map(|a| article_score(a, params)).sum();
    Some(total / T::from_count(articles.len()))
}

/// `Σ_i w_i * score_i` over tickers that have a score. Weights of silent tickers
/// are not redistributed.
pub fn weighted_daily_sentiment<T: Scalar>(
    ticker_scores: &BTreeMap<String, T>,
    weights: &BTreeMap<String, T>,
) -> Result<T> {
    let mut total = T::zero();
    let mut weight_sum = T::zero();
    for (ticker, score) in ticker_scores {
        let w = *weights
            .get(ticker)
            .ok_or_else(|| Error::Alignment(format!("no component weight for {ticker}")))?;
        if !(w >= T::zero()) {
            return Err(Error::InvalidWeight {
                key: ticker.clone(),
                weight: w.as_f64(),
            });
        }
        weight_sum = weight_sum + w;
        total = total + w * *score;
    }
    if weight_sum > T::one() + T::tol(1e-9) {
        return Err(Error::InvalidArgument(format!(
            "participating weights sum to {weight_sum} > 1"
        )));
    }
    Ok(total)
}

/// One step of the memory recursion: `w_today * today + w_past * yesterday`.
/// Without a previous day the carried term is absent.
pub fn recursive_sentiment<T: Scalar>(today: T, yesterday_compound: Option<T>, w_today: T, w_past: T) -> T {
    match yesterday_compound {
        Some(y) => w_today * today + w_past * y,
        None => w_today * today,
    }
}

/// Which of the three sign cases fires for a consecutive pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignShift {
    /// Positive yesterday, negative today.
    PosToNeg,
    /// Negative yesterday, positive today.
    NegToPos,
    /// Product of the two days is `>= 0` (includes any zero).
    Unchanged,
}

pub fn sign_shift<T: Scalar>(today: T, yesterday: T) -> SignShift {
    if today < T::zero() && yesterday > T::zero() {
        SignShift::PosToNeg
    } else if today > T::zero() && yesterday < T::zero() {
        SignShift::NegToPos
    } else {
        SignShift::Unchanged
    }
}

impl<T: Scalar> SentimentParams<T> {
    /// Signed carry coefficient for a shift case.
    pub fn carry(&self, shift: SignShift) -> T {
        match shift {
            SignShift::PosToNeg => -self.w_past1,
            SignShift::NegToPos => self.w_past2,
            SignShift::Unchanged => self.w_past3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentEntry<T> {
    pub date: NaiveDate,
    pub sent: T,
    pub sent_all: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSeries<T> {
    pub entries: Vec<SentimentEntry<T>>,
    pub params: SentimentParams<T>,
}

impl<T: Scalar> SentimentSeries<T> {
    pub fn sent_all_values(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.sent_all).collect()
    }

    pub fn sent_all_by_date(&self) -> BTreeMap<NaiveDate, T> {
        self.entries.iter().map(|e| (e.date, e.sent_all)).collect()
    }
}

/// Run the sign-shift recursion with memory cutoff over a daily series.
pub fn sent_all_series<T: Scalar>(daily: &[(NaiveDate, T)], params: &SentimentParams<T>) -> Result<SentimentSeries<T>> {
    params.validate()?;
    let mut entries: Vec<SentimentEntry<T>> = Vec::with_capacity(daily.len());
    let mut carry_weight = T::one();
    for (k, &(date, sent)) in daily.iter().enumerate() {
        let sent_all = match entries.last() {
            None => sent,
            Some(prev) => {
                if date <= prev.date {
                    return Err(Error::Ordering {
                        prev: prev.date,
                        next: date,
                    });
                }
                let coef = params.carry(sign_shift(sent, daily[k - 1].1));
                let next_weight = carry_weight * coef.abs();
                if next_weight < params.memory_cutoff {
                    carry_weight = T::one();
                    params.w_today * sent
                } else {
                    carry_weight = next_weight;
                    params.w_today * sent + coef * prev.sent_all
                }
            }
        };
        entries.push(SentimentEntry { date, sent, sent_all });
    }
    Ok(SentimentSeries {
        entries,
        params: params.clone(),
    })
}

/// Per-ticker daily scores for every (date, ticker) with news.
pub fn ticker_score_table<T: Scalar>(
    corpus: &Corpus<T>,
    params: &SentimentParams<T>,
) -> BTreeMap<NaiveDate, BTreeMap<String, T>> {
    corpus
        .by_date_ticker()
        .into_iter()
        .map(|(date, groups)| {
            let scores = groups
                .into_iter()
                .filter_map(|(t, arts)| ticker_daily_score(&arts, params).map(|s| (t.to_string(), s)))
                .collect();
            (date, scores)
        })
        .collect()
}

/// Weighted daily sentiment on each of `dates`; days without news are 0.
/// Tickers missing from `weights` are ignored.
pub fn daily_sentiment<T: Scalar>(
    corpus: &Corpus<T>,
    weights: &BTreeMap<String, T>,
    params: &SentimentParams<T>,
    dates: &[NaiveDate],
) -> Result<Vec<(NaiveDate, T)>> {
    params.validate()?;
    let table = ticker_score_table(corpus, params);
    let empty = BTreeMap::new();
    dates
        .iter()
        .map(|d| {
            let scores: BTreeMap<String, T> = table
                .get(d)
                .unwrap_or(&empty)
                .iter()
                .filter(|(t, _)| weights.contains_key(*t))
                .map(|(t, s)| (t.clone(), *s))
                .collect();
            weighted_daily_sentiment(&scores, weights).map(|s| (*d, s))
        })
        .collect()
}

/// Positive/negative/neutral counts per day after source correction and banding.
pub fn daily_counts<T: Scalar>(corpus: &Corpus<T>, params: &SentimentParams<T>) -> BTreeMap<NaiveDate, DailyCounts> {
    let mut out: BTreeMap<NaiveDate, DailyCounts> = BTreeMap::new();
    for a in &corpus.articles {
        let s = article_score(a, params);
        let c = out.entry(a.date).or_default();
        if s > T::zero() {
            c.n_pos += 1;
        } else if s < T::zero() {
            c.n_neg += 1;
        } else {
            c.n_neutral += 1;
        }
    }
    out
}

/// Count-ratio sentiment on each of `dates`.
pub fn baseline_series<T: Scalar>(
    corpus: &Corpus<T>,
    params: &SentimentParams<T>,
    dates: &[NaiveDate],
) -> Result<Vec<(NaiveDate, T)>> {
    let counts = daily_counts(corpus, params);
    dates
        .iter()
        .map(|d| baseline_sentiment(counts.get(d).copied().unwrap_or_default()).map(|s| (*d, s)))
        .collect()
}

/// Outcome of a parameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFit<T> {
    pub best_index: usize,
    pub params: SentimentParams<T>,
    /// Score of every grid entry, in grid order.
    pub scores: Vec<T>,
}

/// Evaluate every parameter set by `scorer(sent_all_at_target_dates, labels)`
/// and return the best; ties go to the earliest grid entry.
///
/// `targets` are already aligned to the feature dates (a label dated `d` is the
/// outcome to predict from information at `d`).
pub fn fit_params_grid<T, F>(
    daily: &[(NaiveDate, T)],
    targets: &[(NaiveDate, u8)],
    grid: &[SentimentParams<T>],
    scorer: F,
) -> Result<GridFit<T>>
where
    T: Scalar,
    F: Fn(&[T], &[u8]) -> Result<T> + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("parameter grid is empty".into()));
    }
    let labels: Vec<u8> = targets.iter().map(|t| t.1).collect();
    let scores = grid
        .par_iter()
        .map(|params| {
            let series = sent_all_series(daily, params)?;
            let by_date = series.sent_all_by_date();
            let features = targets
                .iter()
                .map(|(d, _)| {
                    by_date
                        .get(d)
                        .copied()
                        .ok_or_else(|| Error::Alignment(format!("no sentiment on target date {d}")))
                })
                .collect::<Result<Vec<T>>>()?;
            scorer(&features, &labels)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut best_index = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridFit {
        best_index,
        params: grid[best_index].clone(),
        scores,
    })
}

/// Long-format series CSV: `date,sent,sent_all,param_set_id`.
pub fn write_sentiment_csv<T: Scalar, W: Write>(series: &[(String, SentimentSeries<T>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "sent", "sent_all", "param_set_id"])?;
    for (id, s) in series {
        for e in &s.entries {
            w.write_record([
                e.date.to_string(),
                e.sent.to_string(),
                e.sent_all.to_string(),
                id.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2023, 4, 27).unwrap() + chrono::Days::new(i as u64)
    }

    fn dated(v: &[f64]) -> Vec<(NaiveDate, f64)> {
        v.iter().enumerate().map(|(i, x)| (day(i), *x)).collect()
    }

    fn art(ticker: &str, source: &str, score: f64) -> NewsArticle<f64> {
        NewsArticle {
            date: day(0),
            ticker: ticker.into(),
            source: source.into(),
            title: String::new(),
            score,
        }
    }

    #[test]
    fn baseline_examples() {
        let c = |p, n, z| DailyCounts {
            n_pos: p,
            n_neg: n,
            n_neutral: z,
        };
        assert_eq!(baseline_sentiment::<f64>(c(0, 0, 0)).unwrap(), 0.0);
        assert!((baseline_sentiment::<f64>(c(5, 2, 3)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(baseline_sentiment::<f64>(c(2, 2, 4)).unwrap(), 0.0);
        assert!(matches!(
            baseline_sentiment::<f64>(c(0, 3, 0)),
            Err(Error::DegenerateDenominator(_))
        ));
        assert!(matches!(
            baseline_sentiment::<f64>(c(1, 9, 0)),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn band_examples() {
        assert_eq!(neutral_band(0.04, 0.05), 0.0);
        assert_eq!(neutral_band(-0.04, 0.05), 0.0);
        assert_eq!(neutral_band(0.05, 0.05), 0.05);
        assert_eq!(neutral_band(-3.0, 0.05), -3.0);
    }

    #[test]
    fn source_adjust_examples() {
        assert_eq!(source_adjust(1.0, 1.0, 0.0), 1.0);
        assert!((source_adjust(2.0f64, 0.5, -0.1) - 0.9).abs() < 1e-15);
        assert_eq!(source_adjust(4.0, 2.0, 0.0), 4.0);
        assert_eq!(source_adjust(-3.0, 2.0, 0.0), -4.0);
    }

    #[test]
    fn ticker_score_examples() {
        let p = SentimentParams::<f64>::default();
        let a = [art("A", "s", 1.0), art("A", "s", -1.0)];
        assert_eq!(ticker_daily_score(&a.iter().collect::<Vec<_>>(), &p), Some(0.0));
        let a = [art("A", "s", 0.04), art("A", "s", 0.04)];
        assert_eq!(ticker_daily_score(&a.iter().collect::<Vec<_>>(), &p), Some(0.0));
        let a = [art("A", "s", 3.0)];
        assert_eq!(ticker_daily_score(&a.iter().collect::<Vec<_>>(), &p), Some(3.0));
        assert_eq!(ticker_daily_score::<f64>(&[], &p), None);
    }

    #[test]
    fn ticker_score_applies_source_then_band() {
        let mut p = SentimentParams::<f64>::default();
        p.sources
            .insert("tabloid".into(), SourceAdjustment { alpha: 0.5, beta: 0.0 });
        // 0.08 * 0.5 = 0.04 falls inside the band after correction.
        let a = [art("A", "tabloid", 0.08), art("A", "wire", 0.08)];
        let s = ticker_daily_score(&a.iter().collect::<Vec<_>>(), &p).unwrap();
        assert!((s - 0.04).abs() < 1e-15);
    }

    #[test]
    fn weighted_examples() {
        let w = BTreeMap::from([("A".to_string(), 0.75f64), ("B".to_string(), 0.25)]);
        let s = BTreeMap::from([("A".to_string(), 0.3), ("B".to_string(), 0.3)]);
        assert!((weighted_daily_sentiment(&s, &w).unwrap() - 0.3).abs() < 1e-15);
        let s = BTreeMap::from([("A".to_string(), 1.0), ("B".to_string(), -1.0)]);
        assert_eq!(weighted_daily_sentiment(&s, &w).unwrap(), 0.5);
        let s = BTreeMap::from([("A".to_string(), 0.0), ("B".to_string(), 0.0)]);
        assert_eq!(weighted_daily_sentiment(&s, &w).unwrap(), 0.0);
        // A silent ticker contributes nothing and its weight is not redistributed.
        let s = BTreeMap::from([("A".to_string(), 1.0)]);
        assert_eq!(weighted_daily_sentiment(&s, &w).unwrap(), 0.75);

        let bad = BTreeMap::from([("A".to_string(), -0.1), ("B".to_string(), 0.25)]);
        assert!(matches!(
            weighted_daily_sentiment(&s, &bad),
            Err(Error::InvalidWeight { .. })
        ));
        let heavy = BTreeMap::from([("A".to_string(), 0.9), ("B".to_string(), 0.9)]);
        let s2 = BTreeMap::from([("A".to_string(), 1.0), ("B".to_string(), 1.0)]);
        assert!(weighted_daily_sentiment(&s2, &heavy).is_err());
    }

    #[test]
    fn recursion_step_examples() {
        assert_eq!(recursive_sentiment(0.4, Some(9.0), 0.5, 0.0), 0.2);
        assert!((recursive_sentiment(0.2f64, Some(0.1), 1.0, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(recursive_sentiment(0.0, Some(0.0), 1.0, 0.5), 0.0);
        assert_eq!(recursive_sentiment(0.4, None, 0.5, 0.9), 0.2);
    }

    const REFERENCE_SENT: [f64; 5] = [0.043192, 0.186383, 0.040962, -0.036497, 0.078847];

    #[test]
    fn reproduces_sample_table_columns() {
        let daily = dated(&REFERENCE_SENT);
        let a = sent_all_series(&daily, &SentimentParams::default()).unwrap();
        assert_eq!(a.sent_all_values(), REFERENCE_SENT.to_vec());

        let b = sent_all_series(&daily, &SentimentParams::with_weights(1.0, 0.0, 0.0, 0.5)).unwrap();
        let expected_b = [0.043192, 0.207979, 0.144951, -0.036497, 0.078847];
        for (x, y) in b.sent_all_values().iter().zip(expected_b) {
            assert!((x - y).abs() < 1e-5, "{x} vs {y}");
        }
        let c = sent_all_series(&daily, &SentimentParams::with_weights(1.0, 0.0, 0.0, 1.0)).unwrap();
        let expected_c = [0.043192, 0.229574, 0.270536, -0.036497, 0.078847];
        for (x, y) in c.sent_all_values().iter().zip(expected_c) {
            assert!((x - y).abs() < 1e-5, "{x} vs {y}");
        }
        // The base row is identical across parameter sets.
        assert_eq!(b.entries[0].sent_all, 0.043192);
        let scaled = sent_all_series(&daily, &SentimentParams::with_weights(0.3, 0.2, 0.2, 0.2)).unwrap();
        assert_eq!(scaled.entries[0].sent_all, 0.043192);
    }

    #[test]
    fn ordering_error() {
        let mut daily = dated(&[0.1, 0.2]);
        daily[1].0 = daily[0].0;
        assert!(matches!(
            sent_all_series(&daily, &SentimentParams::default()),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn cutoff_resets_history() {
        // carry product 0.1, 0.01, 0.001 < 0.005 -> reset on the fourth day
        let p = SentimentParams::with_weights(1.0, 0.0, 0.0, 0.1);
        let s = sent_all_series(&dated(&[1.0, 1.0, 1.0, 1.0, 1.0]), &p).unwrap();
        let v = s.sent_all_values();
        assert!((v[1] - 1.1).abs() < 1e-15);
        assert!((v[2] - 1.11).abs() < 1e-15);
        assert_eq!(v[3], 1.0);
        assert!((v[4] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn negative_shift_subtracts_history() {
        let p = SentimentParams::with_weights(1.0, 0.5, 0.0, 0.5);
        let s = sent_all_series(&dated(&[0.4, -0.2]), &p).unwrap();
        assert!((s.entries[1].sent_all - (-0.2 - 0.5 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn daily_sentiment_detail() {
        let mut arts = vec![
            art("A", "s", 1.0),
            art("A", "s", 0.5),
            art("B", "s", -1.0),
            art("C", "s", 2.0),
        ];
        arts[3].date = day(1);
        let corpus = Corpus::new(arts);
        let w = BTreeMap::from([("A".to_string(), 0.5), ("B".to_string(), 0.5)]);
        let s = daily_sentiment(&corpus, &w, &SentimentParams::default(), &[day(0), day(1), day(2)]).unwrap();
        assert!((s[0].1 - (0.5 * 0.75 - 0.5)).abs() < 1e-15);
        assert_eq!(s[1].1, 0.0);
        assert_eq!(s[2].1, 0.0);

        let b = baseline_series(&corpus, &SentimentParams::default(), &[day(0), day(1)]).unwrap();
        // day 0: pos 2, neg 1 -> 1 / (2 + 0 - 1 + 3)
        assert!((b[0].1 - 0.25).abs() < 1e-15);
        assert!((b[1].1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_singleton_and_ties() {
        let daily = dated(&[0.1, -0.2, 0.3, 0.1]);
        let targets: Vec<_> = daily.iter().map(|(d, _)| (*d, 1u8)).collect();
        let one = vec![SentimentParams::with_weights(0.7, 0.1, 0.2, 0.3)];
        let fit = fit_params_grid(&daily, &targets, &one, |_, _| Ok(0.5)).unwrap();
        assert_eq!(fit.params, one[0]);

        let zeros = dated(&[0.0; 6]);
        let targets: Vec<_> = zeros.iter().map(|(d, _)| (*d, 0u8)).collect();
        let grid = SentimentParams::grid(&SentimentParams::default(), &[1.0, 0.5], &[0.0], &[0.0], &[0.0, 0.5]);
        let fit = fit_params_grid(&zeros, &targets, &grid, |x, _| Ok(x.iter().sum::<f64>())).unwrap();
        assert_eq!(fit.best_index, 0);
        assert!(fit_params_grid(&zeros, &targets, &[], |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn grid_ordering() {
        let g = SentimentParams::grid(
            &SentimentParams::<f64>::default(),
            &[1.0],
            &[0.0, 0.1],
            &[0.0],
            &[0.0, 0.5],
        );
        assert_eq!(g.len(), 4);
        assert_eq!((g[1].w_past1, g[1].w_past3), (0.0, 0.5));
        assert_eq!((g[2].w_past1, g[2].w_past3), (0.1, 0.0));
        assert_eq!(SentimentParams::<f64>::unit_steps().len(), 11);
    }

    fn signed() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.0), -1.0f64..1.0]
    }

    proptest! {
        #[test]
        fn exactly_one_indicator(a in signed(), b in signed()) {
            let pos_neg = a < 0.0 && b > 0.0;
            let neg_pos = a > 0.0 && b < 0.0;
            let same = a * b >= 0.0;
            prop_assert_eq!(u8::from(pos_neg) + u8::from(neg_pos) + u8::from(same), 1);
            let expected = if pos_neg { SignShift::PosToNeg } else if neg_pos { SignShift::NegToPos } else { SignShift::Unchanged };
            prop_assert_eq!(sign_shift(a, b), expected);
        }

        #[test]
        fn memoryless_params_are_identity(v in prop::collection::vec(signed(), 1..40)) {
            let s = sent_all_series(&dated(&v), &SentimentParams::default()).unwrap();
            prop_assert_eq!(s.sent_all_values(), v);
        }

        #[test]
        fn band_idempotent(x in -4.0f64..4.0, band in 0.0f64..1.0) {
            prop_assert_eq!(neutral_band(neutral_band(x, band), band), neutral_band(x, band));
        }

        #[test]
        fn pos_to_neg_is_below_no_shift(prev in 0.01f64..1.0, today in 0.01f64..1.0, w in 0.01f64..1.0, w3 in 0.01f64..1.0) {
            let p = SentimentParams::with_weights(1.0, w, 0.0, w3);
            let flipped = sent_all_series(&dated(&[prev, -today]), &p).unwrap();
            let held = sent_all_series(&dated(&[-prev, -today]), &p).unwrap();
            prop_assert!((flipped.entries[1].sent_all - (-today - w * prev)).abs() < 1e-15);
            // Same |Sent| values without a sign shift carry with +w_past3 instead.
            let no_shift = -today + w3 * prev;
            prop_assert!(flipped.entries[1].sent_all < no_shift);
            prop_assert!(held.entries[1].sent_all < 0.0);
        }
    }
}
