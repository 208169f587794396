//! Seeded generators of news corpora and coupled price paths with planted ground
//! truth.
//!
//! Article counts per ticker-day are Poisson, sampled with Knuth's
//! multiplication method on chunks of rate at most 30 (so `exp(-rate)` never
//! underflows). Draws come from ChaCha8 with three independent streams of the
//! same seed: genuine news, injected hype articles and prices. Adding or removing
//! a hype injection therefore leaves the genuine corpus, the prices and the
//! labels unchanged.
//!
//! The planted signal: each day the capital-weighted sentiment of genuine
//! articles is pushed through the compound-score recursion with the planted
//! parameters. With probability `signal_strength` the next day's sector move is
//! up exactly when that score is positive; otherwise it is a fair coin. Every
//! ticker moves in the sector's direction with a random magnitude.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{write_prices_csv, PricePoint};
use crate::news_ingest::{
    news_count_weights, write_news_csv, Corpus, NewsArticle, TickerWeightRow, TickerWeightTable, SCORE_BOUND,
};
use crate::scalar::Scalar;
use crate::sentiment_engine::{daily_sentiment, sent_all_series, SentimentParams};

const NEWS_STREAM: u64 = 0;
const HYPE_STREAM: u64 = 1;
const MARKET_STREAM: u64 = 2;
const POISSON_CHUNK: f64 = 30.0;
const SOURCES: [&str; 3] = ["wire", "daily", "tabloid"];
const VOCAB: [&str; 16] = [
    "chip", "demand", "guidance", "fab", "supply", "margin", "outlook", "orders", "wafer", "node", "earnings",
    "capacity", "export", "design", "memory", "foundry",
];

/// Extra articles on one ticker over a day range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HypeInjection<T> {
    /// Index into the generated ticker list.
    pub ticker: usize,
    /// First affected day (0-based, inclusive).
    pub start_day: usize,
    /// Last affected day (exclusive).
    pub end_day: usize,
    /// Expected article count on affected days is `multiplier` times the base rate.
    pub multiplier: T,
    /// Mean score of the injected articles.
    pub tone: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct GeneratorSpec<T> {
    pub seed: u64,
    pub n_tickers: usize,
    /// Trading days (weekdays) generated from `start_date`.
    pub days: usize,
    pub start_date: NaiveDate,
    /// Expected genuine articles per ticker-day.
    pub article_rate: T,
    /// Mean and spread of the market-wide daily tone.
    pub tone_mean: T,
    pub tone_sd: T,
    /// Spread of each ticker's daily deviation from the market tone.
    pub ticker_tone_sd: T,
    /// Per-article noise around the ticker's daily tone.
    pub score_noise: T,
    /// Scale of daily log-return magnitudes.
    pub daily_vol: T,
    /// Probability that the next-day direction follows the planted score.
    pub signal_strength: T,
    pub params: SentimentParams<T>,
    /// Defaults to `T00`, `T01`, ...
    pub ticker_names: Option<Vec<String>>,
    pub hype: Option<HypeInjection<T>>,
}

impl<T: Scalar> Default for GeneratorSpec<T> {
    fn default() -> Self {
        Self {
            seed: 0,
            n_tickers: 6,
            days: 250,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            article_rate: T::lit(3.0),
            tone_mean: T::zero(),
            tone_sd: T::lit(0.5),
            ticker_tone_sd: T::lit(0.5),
            score_noise: T::lit(0.5),
            daily_vol: T::lit(0.01),
            signal_strength: T::lit(0.8),
            params: SentimentParams::with_weights(T::one(), T::lit(0.2), T::lit(0.2), T::lit(0.5)),
            ticker_names: None,
            hype: None,
        }
    }
}

impl<T: Scalar> GeneratorSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_tickers == 0 || self.days < 2 {
            return bad(format!(
                "need at least 1 ticker and 2 days, got {} and {}",
                self.n_tickers, self.days
            ));
        }
        if let Some(names) = &self.ticker_names {
            if names.len() != self.n_tickers {
                return bad(format!("{} ticker names for {} tickers", names.len(), self.n_tickers));
            }
        }
        for (name, v) in [
            ("article_rate", self.article_rate),
            ("tone_sd", self.tone_sd),
            ("ticker_tone_sd", self.ticker_tone_sd),
            ("score_noise", self.score_noise),
            ("daily_vol", self.daily_vol),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return bad(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if !(self.signal_strength >= T::zero() && self.signal_strength <= T::one()) {
            return bad(format!(
                "signal_strength must lie in [0, 1], got {}",
                self.signal_strength
            ));
        }
        self.params.validate()?;
        if let Some(h) = &self.hype {
            if h.ticker >= self.n_tickers || h.start_day >= h.end_day || h.end_day > self.days {
                return bad(format!(
                    "hype injection on ticker {} over days {}..{} does not fit {} tickers x {} days",
                    h.ticker, h.start_day, h.end_day, self.n_tickers, self.days
                ));
            }
            if !(h.multiplier >= T::one()) || !h.multiplier.is_finite() {
                return bad(format!("hype multiplier must be >= 1, got {}", h.multiplier));
            }
        }
        Ok(())
    }

    pub fn tickers(&self) -> Vec<String> {
        match &self.ticker_names {
            Some(names) => names.clone(),
            None => (0..self.n_tickers).map(|i| format!("T{i:02}")).collect(),
        }
    }

    /// Capital weights proportional to `1 / (rank + 1)`.
    pub fn capital_weights(&self) -> BTreeMap<String, T> {
        let raw: Vec<T> = (0..self.n_tickers).map(|i| T::one() / T::from_count(i + 1)).collect();
        let total: T = raw.iter().copied().sum();
        self.tickers()
            .into_iter()
            .zip(raw)
            .map(|(t, w)| (t, w / total))
            .collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut out = Vec::with_capacity(self.days);
        let mut d = self.start_date;
        while out.len() < self.days {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                out.push(d);
            }
            d = d + Days::new(1);
        }
        out
    }
}

/// Generated corpus, prices and the planted truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData<T> {
    /// Genuine and injected articles, ordered by date then ticker.
    pub corpus: Corpus<T>,
    pub prices: BTreeMap<String, Vec<PricePoint<T>>>,
    /// Capital weights from the generator, news weights counted from `corpus`.
    pub weights: TickerWeightTable<T>,
    /// Sector direction on each date after the first.
    pub labels: Vec<(NaiveDate, u8)>,
    /// Planted compound score on each date, from genuine articles only.
    pub driver: Vec<(NaiveDate, T)>,
    /// Whether each label followed the driver (as opposed to a coin flip).
    pub signal_followed: Vec<bool>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Poisson draw by Knuth's method, summed over chunks of rate at most 30.
pub fn poisson(rng: &mut impl Rng, rate: f64) -> u64 {
    let mut remaining = rate.max(0.0);
    let mut total = 0;
    while remaining > 0.0 {
        let chunk = remaining.min(POISSON_CHUNK);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut p: f64 = rng.random();
        while p > limit {
            total += 1;
            p *= rng.random::<f64>();
        }
    }
    total
}

/// `<ticker> <word> <word> <word> n<id>`; the id token keeps titles distinct.
fn title(rng: &mut ChaCha8Rng, ticker: &str, id: usize) -> String {
    let mut words = [""; 3];
    for w in &mut words {
        *w = VOCAB[rng.random_range(0..VOCAB.len())];
    }
    format!("{ticker} {} {} {} n{id}", words[0], words[1], words[2])
}

fn clamp_score<T: Scalar>(s: T) -> T {
    let b = T::lit(SCORE_BOUND);
    s.max(-b).min(b)
}

pub fn generate<T: Scalar>(spec: &GeneratorSpec<T>) -> Result<SyntheticData<T>> {
    spec.validate()?;
    let tickers = spec.tickers();
    let dates = spec.dates();
    let mut news_rng = stream(spec.seed, NEWS_STREAM);
    let mut hype_rng = stream(spec.seed, HYPE_STREAM);
    let mut market_rng = stream(spec.seed, MARKET_STREAM);

    let mut genuine = Vec::new();
    let mut all = Vec::new();
    let mut next_id = 0usize;
    let mut next_hype_id = 0usize;
    for (day, date) in dates.iter().enumerate() {
        let tone = spec.tone_mean + spec.tone_sd * normal::<T>(&mut news_rng);
        for (i, ticker) in tickers.iter().enumerate() {
            let ticker_tone = tone + spec.ticker_tone_sd * normal::<T>(&mut news_rng);
            let n = poisson(&mut news_rng, spec.article_rate.as_f64());
            for _ in 0..n {
                let score = clamp_score(ticker_tone + spec.score_noise * normal::<T>(&mut news_rng));
                let a = NewsArticle {
                    date: *date,
                    ticker: ticker.clone(),
                    source: SOURCES[news_rng.random_range(0..SOURCES.len())].to_string(),
                    title: title(&mut news_rng, ticker, next_id),
                    score,
                };
                next_id += 1;
                genuine.push(a.clone());
                all.push(a);
            }
            if let Some(h) = spec
                .hype
                .as_ref()
                .filter(|h| h.ticker == i && (h.start_day..h.end_day).contains(&day))
            {
                let extra = (h.multiplier - T::one()) * spec.article_rate;
                for _ in 0..poisson(&mut hype_rng, extra.as_f64()) {
                    let score = clamp_score(h.tone + spec.score_noise * normal::<T>(&mut hype_rng));
                    all.push(NewsArticle {
                        date: *date,
                        ticker: ticker.clone(),
                        source: SOURCES[hype_rng.random_range(0..SOURCES.len())].to_string(),
                        title: title(&mut hype_rng, ticker, next_hype_id).replace(" n", " h"),
                        score,
                    });
                    next_hype_id += 1;
                }
            }
        }
    }
    let genuine = Corpus::new(genuine);
    let corpus = Corpus::new(all);

    let capital = spec.capital_weights();
    let daily = daily_sentiment(&genuine, &capital, &spec.params, &dates)?;
    let driver = sent_all_series(&daily, &spec.params)?;
    let driver: Vec<(NaiveDate, T)> = driver.entries.iter().map(|e| (e.date, e.sent_all)).collect();

    let mut closes: Vec<T> = (0..tickers.len()).map(|i| T::lit(50.0 + 10.0 * i as f64)).collect();
    let mut prices: BTreeMap<String, Vec<PricePoint<T>>> = tickers
        .iter()
        .zip(&closes)
        .map(|(t, c)| (t.clone(), vec![PricePoint::new(dates[0], *c)]))
        .collect();
    let mut labels = Vec::with_capacity(dates.len() - 1);
    let mut signal_followed = Vec::with_capacity(dates.len() - 1);
    for day in 1..dates.len() {
        let follow = market_rng.random::<f64>() < spec.signal_strength.as_f64();
        let coin = market_rng.random::<bool>();
        let up = if follow { driver[day - 1].1 > T::zero() } else { coin };
        labels.push((dates[day], u8::from(up)));
        signal_followed.push(follow);
        for (ticker, close) in tickers.iter().zip(closes.iter_mut()) {
            let magnitude = spec.daily_vol * (normal::<T>(&mut market_rng).abs() + T::lit(0.05));
            let r = if up { magnitude } else { -magnitude };
            *close = *close * r.exp();
            prices
                .get_mut(ticker)
                .expect("ticker present")
                .push(PricePoint::new(dates[day], *close));
        }
    }

    let news = news_count_weights(&corpus, &tickers)?;
    let rows = tickers
        .iter()
        .map(|t| TickerWeightRow {
            ticker: t.clone(),
            close_price: prices[t].last().expect("nonempty series").close,
            capital: capital[t] * T::lit(1.0e6),
            capital_weight: capital[t],
            news_weight: news[t],
        })
        .collect();

    Ok(SyntheticData {
        corpus,
        prices,
        weights: TickerWeightTable { rows },
        labels,
        driver,
        signal_followed,
    })
}

impl<T: Scalar> SyntheticData<T> {
    /// `date,direction,driver_prev,signal_followed`: the label, the planted score
    /// of the previous day that drove it, and whether it was followed.
    pub fn write_labels_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "direction", "driver_prev", "signal_followed"])?;
        for (k, (date, label)) in self.labels.iter().enumerate() {
            w.write_record([
                date.to_string(),
                label.to_string(),
                self.driver[k].1.to_string(),
                u8::from(self.signal_followed[k]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// News, prices and labels CSVs concatenated; the replay fingerprint.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_news_csv(&self.corpus, &mut buf)?;
        write_prices_csv(&self.prices, &mut buf)?;
        self.write_labels_csv(&mut buf)?;
        crate::news_ingest::write_weight_table_csv(&self.weights, &mut buf)?;
        Ok(buf)
    }
}

/// Generate twice and compare the serialized outputs byte for byte.
pub fn replay_check<T: Scalar>(spec: &GeneratorSpec<T>) -> Result<bool> {
    Ok(generate(spec)?.to_bytes()? == generate(spec)?.to_bytes()?)
}
