//! News ingestion: the news CSV format, near-duplicate removal, news-count
//! weights, the news-bias vector, and the sector weight table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{stable_sum, Scalar};

/// Bound of the per-article sentiment scale.
pub const SCORE_BOUND: f64 = 4.0;

/// Default Jaccard threshold for near-identical titles.
pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.9;

/// Published rounding slack on the weight-table column sums.
pub const WEIGHT_SUM_TOLERANCE: f64 = 0.005;

const NEWS_HEADER: [&str; 5] = ["date", "ticker", "source", "title", "score"];
const WEIGHT_HEADER: [&str; 5] = [
    "ticker",
    "close_price",
    "capital_millions",
    "capital_weight_pct",
    "news_weight_pct",
];

const APPENDIX_A_CSV: &str = include_str!("../data/appendix_a.csv");

/// One scored news item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsArticle<T> {
    pub date: NaiveDate,
    pub ticker: String,
    pub source: String,
    pub title: String,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus<T> {
    pub articles: Vec<NewsArticle<T>>,
    /// `None` for an empty corpus.
    pub date_range: Option<(NaiveDate, NaiveDate)>,
}

impl<T: Scalar> Corpus<T> {
    pub fn new(articles: Vec<NewsArticle<T>>) -> Self {
        let date_range =
            articles
                .iter()
                .map(|a| a.date)
                .fold(None, |acc: Option<(NaiveDate, NaiveDate)>, d| match acc {
                    None => Some((d, d)),
                    Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
                });
        Self { articles, date_range }
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn tickers(&self) -> BTreeSet<String> {
        self.articles.iter().map(|a| a.ticker.clone()).collect()
    }

    /// Article counts per (date, ticker).
    pub fn daily_counts(&self) -> BTreeMap<(NaiveDate, String), usize> {
        let mut out = BTreeMap::new();
        for a in &self.articles {
            *out.entry((a.date, a.ticker.clone())).or_insert(0) += 1;
        }
        out
    }

    /// Articles grouped by date, then ticker, preserving input order in each group.
    pub fn by_date_ticker(&self) -> BTreeMap<NaiveDate, BTreeMap<&str, Vec<&NewsArticle<T>>>> {
        let mut out: BTreeMap<NaiveDate, BTreeMap<&str, Vec<&NewsArticle<T>>>> = BTreeMap::new();
        for a in &self.articles {
            out.entry(a.date)
                .or_default()
                .entry(a.ticker.as_str())
                .or_default()
                .push(a);
        }
        out
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

/// Parse the news CSV (`date,ticker,source,title,score`).
pub fn parse_news_csv<T: Scalar, R: Read>(reader: R) -> Result<Corpus<T>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    check_header(rdr.headers()?, &NEWS_HEADER)?;
    let bound = T::lit(SCORE_BOUND);
    let mut articles = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date `{}`: {e}", &rec[0])))?;
        let ticker = rec[1].trim().to_string();
        if ticker.is_empty() {
            return Err(parse_err("empty ticker".into()));
        }
        let score: T = rec[4]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad score `{}`", &rec[4])))?;
        if !(score.abs() <= bound) {
            return Err(Error::Range {
                line,
                score: score.as_f64(),
            });
        }
        articles.push(NewsArticle {
            date,
            ticker,
            source: rec[2].to_string(),
            title: rec[3].to_string(),
            score,
        });
    }
    Ok(Corpus::new(articles))
}

pub fn write_news_csv<T: Scalar, W: Write>(corpus: &Corpus<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(NEWS_HEADER)?;
    for a in &corpus.articles {
        w.write_record([
            a.date.to_string(),
            a.ticker.clone(),
            a.source.clone(),
            a.title.clone(),
            a.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn title_tokens(title: &str) -> BTreeSet<String> {
    title
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Token-set Jaccard similarity of two lowercased titles. Two empty titles are identical.
pub fn title_jaccard(a: &str, b: &str) -> f64 {
    jaccard(&title_tokens(a), &title_tokens(b))
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Drop articles whose title is at least `threshold`-similar to an earlier kept
/// article of the same ticker on the same day.
pub fn dedupe_articles<T: Scalar>(corpus: &Corpus<T>, threshold: f64) -> Result<Corpus<T>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "dedup threshold {threshold} outside [0, 1]"
        )));
    }
    let mut kept_tokens: HashMap<(NaiveDate, &str), Vec<BTreeSet<String>>> = HashMap::new();
    let mut kept = Vec::with_capacity(corpus.len());
    for a in &corpus.articles {
        let tokens = title_tokens(&a.title);
        let group = kept_tokens.entry((a.date, a.ticker.as_str())).or_default();
        if group.iter().any(|k| jaccard(k, &tokens) >= threshold) {
            continue;
        }
        group.push(tokens);
        kept.push(a.clone());
    }
    Ok(Corpus::new(kept))
}

/// Share of listed-ticker articles attributed to each ticker. Articles for
/// unlisted tickers are not counted.
pub fn news_count_weights<T: Scalar>(corpus: &Corpus<T>, tickers: &[String]) -> Result<BTreeMap<String, T>> {
    if tickers.is_empty() {
        return Err(Error::InvalidArgument("ticker list is empty".into()));
    }
    let mut counts: BTreeMap<String, usize> = tickers.iter().map(|t| (t.clone(), 0)).collect();
    for a in &corpus.articles {
        if let Some(c) = counts.get_mut(&a.ticker) {
            *c += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let total = T::from_count(total);
    Ok(counts.into_iter().map(|(t, c)| (t, T::from_count(c) / total)).collect())
}

/// Per-ticker over-representation: news share minus market share.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasVector<T> {
    pub entries: BTreeMap<String, T>,
}

impl<T: Scalar> BiasVector<T> {
    pub fn total(&self) -> T {
        stable_sum(self.entries.values().copied())
    }
}

pub fn bias_vector<T: Scalar>(
    news_weights: &BTreeMap<String, T>,
    market_weights: &BTreeMap<String, T>,
) -> Result<BiasVector<T>> {
    if news_weights.len() != market_weights.len() || news_weights.keys().any(|k| !market_weights.contains_key(k)) {
        let a: BTreeSet<_> = news_weights.keys().collect();
        let b: BTreeSet<_> = market_weights.keys().collect();
        let diff: Vec<_> = a.symmetric_difference(&b).map(|s| s.as_str()).collect();
        return Err(Error::Alignment(format!(
            "news and market weights disagree on tickers: {}",
            diff.join(", ")
        )));
    }
    let entries = news_weights
        .iter()
        .map(|(k, n)| (k.clone(), *n - market_weights[k]))
        .collect();
    Ok(BiasVector { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerWeightRow<T> {
    pub ticker: String,
    pub close_price: T,
    /// Market capitalization in millions.
    pub capital: T,
    /// Fraction, not percent.
    pub capital_weight: T,
    /// Fraction, not percent.
    pub news_weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickerWeightTable<T> {
    pub rows: Vec<TickerWeightRow<T>>,
}

impl<T: Scalar> TickerWeightTable<T> {
    pub fn tickers(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.ticker.clone()).collect()
    }

    pub fn capital_weights(&self) -> BTreeMap<String, T> {
        self.rows.iter().map(|r| (r.ticker.clone(), r.capital_weight)).collect()
    }

    pub fn news_weights(&self) -> BTreeMap<String, T> {
        self.rows.iter().map(|r| (r.ticker.clone(), r.news_weight)).collect()
    }

    pub fn row(&self, ticker: &str) -> Option<&TickerWeightRow<T>> {
        self.rows.iter().find(|r| r.ticker == ticker)
    }

    pub fn capital_weight_sum(&self) -> T {
        stable_sum(self.rows.iter().map(|r| r.capital_weight))
    }

    pub fn news_weight_sum(&self) -> T {
        stable_sum(self.rows.iter().map(|r| r.news_weight))
    }

    /// Weights in `[0, 1]` and both columns summing to 1 within the published rounding slack.
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            for w in [r.capital_weight, r.news_weight] {
                if !(w >= T::zero() && w <= T::one()) {
                    return Err(Error::InvalidWeight {
                        key: r.ticker.clone(),
                        weight: w.as_f64(),
                    });
                }
            }
        }
        let tol = T::lit(WEIGHT_SUM_TOLERANCE);
        for (name, sum) in [("capital", self.capital_weight_sum()), ("news", self.news_weight_sum())] {
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "{name} weights sum to {sum}, not 1 within {WEIGHT_SUM_TOLERANCE}"
                )));
            }
        }
        Ok(())
    }
}

/// Parse the weight-table CSV; percent columns become fractions.
pub fn parse_weight_table_csv<T: Scalar, R: Read>(reader: R) -> Result<TickerWeightTable<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(rdr.headers()?, &WEIGHT_HEADER)?;
    let hundred = T::lit(100.0);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let num = |i: usize| -> Result<T> {
            rec[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} `{}`", WEIGHT_HEADER[i], &rec[i]),
            })
        };
        rows.push(TickerWeightRow {
            ticker: rec[0].to_string(),
            close_price: num(1)?,
            capital: num(2)?,
            capital_weight: num(3)? / hundred,
            news_weight: num(4)? / hundred,
        });
    }
    let table = TickerWeightTable { rows };
    table.validate()?;
    Ok(table)
}

pub fn write_weight_table_csv<T: Scalar, W: Write>(table: &TickerWeightTable<T>, writer: W) -> Result<()> {
    let hundred = T::lit(100.0);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(WEIGHT_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.ticker.clone(),
            r.close_price.to_string(),
            r.capital.to_string(),
            (r.capital_weight * hundred).to_string(),
            (r.news_weight * hundred).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The 30-constituent semiconductor-sector weight table (LSEG, 2024-07-17), with
/// the two index-future entries already excluded.
pub fn appendix_a_fixture<T: Scalar>() -> TickerWeightTable<T> {
    parse_weight_table_csv(APPENDIX_A_CSV.as_bytes()).expect("bundled weight table is well-formed")
}
