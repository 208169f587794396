use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use hypesent::hype_measure::{detect_hype, sector_reweight, write_hype_csv, HypeState};
use hypesent::market_data::{
    direction_labels, parse_prices_csv, rolling_volatility, sector_returns, write_prices_csv, LabelMode, TRADING_DAYS,
};
use hypesent::news_ingest::{
    appendix_a_fixture, dedupe_articles, parse_news_csv, parse_weight_table_csv, write_news_csv, write_weight_table_csv,
};
use hypesent::pipeline::{forecast, measure_weights, ticker_sentiment, trading_axis};
use hypesent::sentiment_engine::{daily_sentiment, sent_all_series};
use hypesent::synthetic::generate;
use hypesent::{GeneratorSpecF64, MeasureMode, PipelineInputsF64, PricePointF64, SentimentSeriesF64, SweepOutcome};
use log::info;
use serde::Serialize;

use crate::options::{RunConfig, WeightSource};

/// Schema id written at the top of `generator.toml`.
pub const SYNTH_SCHEMA: &str = "hypesent.synth/1";

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn out_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).with_context(|| format!("creating output directory {}", path.display()))?;
    Ok(path.to_path_buf())
}

/// Open `path` and run `parse` on it, prefixing any error with the path.
fn parse_file<R>(path: &Path, parse: impl FnOnce(File) -> hypesent::Result<R>) -> Result<R> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse(file).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(dir: &Path, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(dir, name)?;
    fill(&mut w)?;
    w.flush()
        .with_context(|| format!("writing {}", dir.join(name).display()))?;
    Ok(())
}

fn csv_file(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    write_file(dir, name, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(header)?;
        for r in rows {
            c.write_record(r)?;
        }
        c.flush()?;
        Ok(())
    })
}

/// Corpus (deduplicated), prices and weight table named by the config.
struct Loaded {
    inputs: PipelineInputsF64,
    articles_read: usize,
}

fn load_weights(config: &RunConfig) -> Result<hypesent::TickerWeightTableF64> {
    match &config.weights {
        WeightSource::AppendixA => Ok(appendix_a_fixture()),
        WeightSource::File(path) => parse_file(path, parse_weight_table_csv),
    }
}

fn load(config: &RunConfig) -> Result<Loaded> {
    let news_path = config.require_news()?;
    let prices_path = config.require_prices()?;
    let raw = parse_file(news_path, parse_news_csv)?;
    let prices = parse_file(prices_path, parse_prices_csv)?;
    let weights = load_weights(config)?;
    weights.validate().context("weight table")?;
    let corpus = dedupe_articles(&raw, config.dedup_threshold)?;
    info!(
        "dedup removed {} of {} articles (threshold {})",
        raw.len() - corpus.len(),
        raw.len(),
        config.dedup_threshold
    );
    Ok(Loaded {
        articles_read: raw.len(),
        inputs: PipelineInputsF64 {
            corpus,
            prices,
            weights,
        },
    })
}

fn opt_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct IngestSummary {
    articles_read: usize,
    articles_kept: usize,
    duplicates_removed: usize,
    tickers_listed: usize,
    tickers_priced: usize,
    tickers_with_news: usize,
    trading_days: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
    capital_weight_sum: f64,
    news_weight_sum: f64,
}

/// Deduplicated corpus, prices, weight table and the sector market series.
pub fn ingest(config: &RunConfig) -> Result<()> {
    let Loaded { inputs, articles_read } = load(config)?;
    let dir = out_dir(&config.out_dir)?;
    let axis = trading_axis(&inputs)?;
    let listed: BTreeSet<String> = inputs.weights.tickers().into_iter().collect();
    let priced: Vec<&String> = listed.iter().filter(|t| inputs.prices.contains_key(*t)).collect();
    let with_news = inputs.corpus.tickers().intersection(&listed).count();

    let on_axis: BTreeSet<NaiveDate> = axis.iter().copied().collect();
    let aligned: BTreeMap<String, Vec<PricePointF64>> = priced
        .iter()
        .map(|t| {
            let s = inputs.prices[*t]
                .iter()
                .filter(|p| on_axis.contains(&p.date))
                .copied()
                .collect();
            ((*t).clone(), s)
        })
        .collect();
    let returns = sector_returns(&aligned, &inputs.weights.capital_weights())?;
    let return_labels: BTreeMap<NaiveDate, u8> = direction_labels(&returns.entries, LabelMode::Sign)?
        .into_iter()
        .collect();
    let vol: BTreeMap<NaiveDate, f64> = if returns.len() >= config.vol_window {
        rolling_volatility(&returns, config.vol_window, TRADING_DAYS)?
            .entries
            .into_iter()
            .collect()
    } else {
        BTreeMap::new()
    };
    let vol_entries: Vec<(NaiveDate, f64)> = vol.iter().map(|(d, v)| (*d, *v)).collect();
    let vol_labels: BTreeMap<NaiveDate, u8> = if vol_entries.len() >= 2 {
        direction_labels(&vol_entries, LabelMode::Delta)?.into_iter().collect()
    } else {
        BTreeMap::new()
    };

    write_file(&dir, "corpus.csv", |w| Ok(write_news_csv(&inputs.corpus, w)?))?;
    write_file(&dir, "prices.csv", |w| Ok(write_prices_csv(&inputs.prices, w)?))?;
    write_file(&dir, "weights.csv", |w| Ok(write_weight_table_csv(&inputs.weights, w)?))?;
    let returns_by_date: BTreeMap<NaiveDate, f64> = returns.entries.iter().copied().collect();
    let rows = axis
        .iter()
        .map(|d| {
            vec![
                d.to_string(),
                opt_string(returns_by_date.get(d).copied()),
                opt_string(vol.get(d).copied()),
                return_labels.get(d).map(u8::to_string).unwrap_or_default(),
                vol_labels.get(d).map(u8::to_string).unwrap_or_default(),
            ]
        })
        .collect();
    csv_file(
        &dir,
        "market.csv",
        &[
            "date",
            "sector_return",
            "volatility",
            "return_direction",
            "volatility_direction",
        ],
        rows,
    )?;

    let summary = IngestSummary {
        articles_read,
        articles_kept: inputs.corpus.len(),
        duplicates_removed: articles_read - inputs.corpus.len(),
        tickers_listed: listed.len(),
        tickers_priced: priced.len(),
        tickers_with_news: with_news,
        trading_days: axis.len(),
        first_date: axis.first().copied(),
        last_date: axis.last().copied(),
        capital_weight_sum: inputs.weights.capital_weight_sum(),
        news_weight_sum: inputs.weights.news_weight_sum(),
    };
    write_file(&dir, "ingest_summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        Ok(())
    })?;
    info!(
        "ingest: {} tickers, {} trading days, {} articles written to {}",
        summary.tickers_listed,
        summary.trading_days,
        summary.articles_kept,
        dir.display()
    );
    Ok(())
}

fn parse_sent_input(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr
        .headers()
        .with_context(|| format!("parsing {}", path.display()))?
        .clone();
    if header.iter().ne(["date", "sent"]) {
        anyhow::bail!("{}: expected header `date,sent`", path.display());
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("parsing {}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .with_context(|| format!("{}: line {line}: bad date `{}`", path.display(), &rec[0]))?;
        let sent: f64 = rec[1]
            .parse()
            .with_context(|| format!("{}: line {line}: bad sent `{}`", path.display(), &rec[1]))?;
        out.push((date, sent));
    }
    Ok(out)
}

/// Compound-score series per parameter set (explicit sets, then grid entries).
pub fn score(config: &RunConfig) -> Result<()> {
    let mut sets = config.param_sets.clone();
    sets.extend(config.grid.iter().flatten().cloned());

    let mut daily_per_set: Vec<Vec<(NaiveDate, f64)>> = Vec::with_capacity(sets.len());
    if let Some(path) = &config.sent_input {
        let daily = parse_sent_input(path)?;
        daily_per_set.resize(sets.len(), daily);
    } else {
        let Loaded { inputs, .. } = load(config)?;
        let axis = trading_axis(&inputs)?;
        let weights = measure_weights(&inputs, config.measure, config.kappa, &config.hype, &sets[0])?;
        for p in &sets {
            daily_per_set.push(daily_sentiment(&inputs.corpus, &weights.weights, p, &axis)?);
        }
    }
    let series: Vec<SentimentSeriesF64> = sets
        .iter()
        .zip(&daily_per_set)
        .map(|(p, d)| sent_all_series(d, p))
        .collect::<hypesent::Result<_>>()?;

    let dir = out_dir(&config.out_dir)?;
    let names: Vec<String> = if series.len() == 1 {
        vec!["sent_all".into()]
    } else {
        (0..series.len()).map(|k| format!("sent_all_p{k}")).collect()
    };
    let mut header = vec!["date"];
    header.extend(names.iter().map(String::as_str));
    let rows = (0..series[0].entries.len())
        .map(|i| {
            let mut row = vec![series[0].entries[i].date.to_string()];
            row.extend(series.iter().map(|s| s.entries[i].sent_all.to_string()));
            row
        })
        .collect();
    csv_file(&dir, "sentiment_series.csv", &header, rows)?;
    let daily_rows = series[0]
        .entries
        .iter()
        .map(|e| vec![e.date.to_string(), e.sent.to_string()])
        .collect();
    csv_file(&dir, "daily_sent.csv", &["date", "sent"], daily_rows)?;
    let param_rows = sets
        .iter()
        .zip(&names)
        .map(|(p, n)| {
            vec![
                n.clone(),
                p.w_today.to_string(),
                p.w_past1.to_string(),
                p.w_past2.to_string(),
                p.w_past3.to_string(),
                p.neutral_band.to_string(),
                p.memory_cutoff.to_string(),
            ]
        })
        .collect();
    csv_file(
        &dir,
        "param_sets.csv",
        &[
            "column",
            "w_today",
            "w_past1",
            "w_past2",
            "w_past3",
            "neutral_band",
            "memory_cutoff",
        ],
        param_rows,
    )?;
    info!(
        "score: {} parameter sets over {} dates",
        sets.len(),
        series[0].entries.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct ForecastLine<'a> {
    indicator: &'a str,
    measure_mode: String,
    target: String,
    model: String,
    best_seed: u64,
    validation_score: f64,
    test_accuracy: f64,
    test_support: usize,
    n_states: u64,
    split_mode: String,
    failed_seeds: usize,
}

/// Sweep every indicator under measure mode `off` and, if different, the
/// configured mode; write reports, the indicator matrices and a comparison table.
pub fn forecast_cmd(config: &RunConfig) -> Result<()> {
    let Loaded { inputs, .. } = load(config)?;
    let dir = out_dir(&config.out_dir)?;
    let mut modes = vec![MeasureMode::Off];
    if config.measure != MeasureMode::Off {
        modes.push(config.measure);
    }
    let mut comparison = Vec::new();
    let mut summary = Vec::new();
    for mode in modes {
        let run = forecast(&inputs, &config.pipeline(mode))?;
        for (name, reason) in &run.prepared.skipped {
            info!("{mode}: indicator {name} skipped: {reason}");
        }
        let report_dir = out_dir(&dir.join("reports").join(mode.to_string()))?;
        for o in &run.outcomes {
            write_file(&report_dir, &format!("{}.txt", o.indicator), |w| {
                w.write_all(o.report.to_text().as_bytes())?;
                Ok(())
            })?;
            write_file(&report_dir, &format!("{}.csv", o.indicator), |w| {
                Ok(o.report.write_csv(w)?)
            })?;
            let line = forecast_line(o, mode, config);
            comparison.push(vec![
                line.indicator.to_string(),
                line.measure_mode.clone(),
                line.target.clone(),
                line.model.clone(),
                line.best_seed.to_string(),
                line.validation_score.to_string(),
                line.test_accuracy.to_string(),
                line.n_states.to_string(),
                line.split_mode.clone(),
            ]);
            summary.push(serde_json::to_string(&line)?);
        }
        let data = &run.prepared.dataset;
        let mut header = vec!["date".to_string()];
        header.extend(data.feature_names.iter().cloned());
        header.push("label".into());
        let rows = data
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut row = vec![data.dates[i].to_string()];
                row.extend(f.iter().map(f64::to_string));
                row.push(data.targets[i].to_string());
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv_file(&dir, &format!("indicators_{mode}.csv"), &header, rows)?;
    }
    csv_file(
        &dir,
        "comparison.csv",
        &[
            "indicator",
            "measure_mode",
            "target",
            "model",
            "best_seed",
            "validation_score",
            "test_accuracy",
            "n_states",
            "split_mode",
        ],
        comparison,
    )?;
    write_file(&dir, "summary.jsonl", |w| {
        for line in &summary {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    for line in &summary {
        println!("{line}");
    }
    Ok(())
}

fn forecast_line<'a>(o: &'a SweepOutcome<f64>, mode: MeasureMode, config: &RunConfig) -> ForecastLine<'a> {
    ForecastLine {
        indicator: &o.indicator,
        measure_mode: mode.to_string(),
        target: config.target.to_string(),
        model: config.model.to_string(),
        best_seed: o.best.seed,
        validation_score: o.best.validation_score,
        test_accuracy: o.test_accuracy,
        test_support: o.report.total(),
        n_states: config.n_states,
        split_mode: o.split_mode.to_string(),
        failed_seeds: o.failed_seeds,
    }
}

/// Per-ticker hype classification with the table's `z = capital / news`, and
/// daily news counts.
pub fn hype(config: &RunConfig) -> Result<()> {
    let Loaded { inputs, .. } = load(config)?;
    let dir = out_dir(&config.out_dir)?;
    let listed = inputs.weights.tickers();
    let prices: BTreeMap<String, Vec<PricePointF64>> = listed
        .iter()
        .filter_map(|t| inputs.prices.get(t).map(|s| (t.clone(), s.clone())))
        .collect();
    if prices.is_empty() {
        anyhow::bail!("no ticker in the weight table has prices");
    }
    let sentiment = ticker_sentiment(&inputs.corpus, &config.param_sets[0]);
    let report = detect_hype(&inputs.corpus, &prices, &sentiment, &config.hype)?;

    // The density is only defined where both shares are positive.
    let rows: Vec<_> = inputs
        .weights
        .rows
        .iter()
        .filter(|r| r.news_weight > 0.0 && r.capital_weight > 0.0)
        .collect();
    let news: BTreeMap<String, f64> = rows.iter().map(|r| (r.ticker.clone(), r.news_weight)).collect();
    let capital: BTreeMap<String, f64> = rows.iter().map(|r| (r.ticker.clone(), r.capital_weight)).collect();
    let z = if rows.is_empty() {
        BTreeMap::new()
    } else {
        sector_reweight(&news, &capital)?.z
    };
    write_file(&dir, "hype_report.csv", |w| Ok(write_hype_csv(&report, &z, w)?))?;

    let axis = trading_axis(&inputs)?;
    let counts = inputs.corpus.daily_counts();
    let mut count_rows = Vec::with_capacity(axis.len() * listed.len());
    for d in &axis {
        let per: Vec<usize> = prices
            .keys()
            .map(|t| counts.get(&(*d, t.clone())).copied().unwrap_or(0))
            .collect();
        let total: usize = per.iter().sum();
        for (t, c) in prices.keys().zip(per) {
            count_rows.push(vec![d.to_string(), t.clone(), c.to_string(), total.to_string()]);
        }
    }
    csv_file(
        &dir,
        "news_counts.csv",
        &["date", "ticker", "count", "sector_total"],
        count_rows,
    )?;

    let flagged: Vec<String> = report
        .tickers
        .iter()
        .filter(|t| t.hype_state != HypeState::Neutral)
        .map(|t| format!("{} {}", t.ticker, t.hype_state))
        .collect();
    info!(
        "hype: {} tickers, flagged: [{}]",
        report.tickers.len(),
        flagged.join(", ")
    );
    Ok(())
}

/// Generator settings that can be given as flags on top of the spec file.
#[derive(Debug, Clone, Default)]
pub struct SynthOverrides {
    pub seed: Option<u64>,
    pub days: Option<usize>,
    pub n_tickers: Option<usize>,
    pub signal_strength: Option<f64>,
    pub daily_vol: Option<f64>,
    pub hype_ticker: Option<usize>,
    pub hype_start: Option<usize>,
    pub hype_end: Option<usize>,
    pub hype_multiplier: Option<f64>,
    pub hype_tone: Option<f64>,
}

/// Load a generator spec file (`schema = "hypesent.synth/1"` plus spec fields).
pub fn read_generator_spec(path: &Path) -> Result<GeneratorSpecF64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| crate::UsageError(format!("spec {}: {e}", path.display())))?;
    match table.remove("schema") {
        Some(toml::Value::String(s)) if s == SYNTH_SCHEMA => {}
        _ => {
            return Err(crate::UsageError(format!(
                "spec {}: missing `schema = \"{SYNTH_SCHEMA}\"`",
                path.display()
            ))
            .into())
        }
    }
    table
        .try_into()
        .map_err(|e| crate::UsageError(format!("spec {}: {e}", path.display())).into())
}

pub fn apply_overrides(mut spec: GeneratorSpecF64, o: &SynthOverrides) -> Result<GeneratorSpecF64> {
    spec.seed = o.seed.unwrap_or(spec.seed);
    spec.days = o.days.unwrap_or(spec.days);
    spec.n_tickers = o.n_tickers.unwrap_or(spec.n_tickers);
    spec.signal_strength = o.signal_strength.unwrap_or(spec.signal_strength);
    spec.daily_vol = o.daily_vol.unwrap_or(spec.daily_vol);
    let any_hype = o.hype_ticker.is_some()
        || o.hype_start.is_some()
        || o.hype_end.is_some()
        || o.hype_multiplier.is_some()
        || o.hype_tone.is_some();
    if any_hype {
        let mut h = spec.hype.clone().unwrap_or(hypesent::synthetic::HypeInjection {
            ticker: 0,
            start_day: 0,
            end_day: spec.days,
            multiplier: 5.0,
            tone: 1.0,
        });
        h.ticker = o.hype_ticker.unwrap_or(h.ticker);
        h.start_day = o.hype_start.unwrap_or(h.start_day);
        h.end_day = o.hype_end.unwrap_or(h.end_day);
        h.multiplier = o.hype_multiplier.unwrap_or(h.multiplier);
        h.tone = o.hype_tone.unwrap_or(h.tone);
        spec.hype = Some(h);
    }
    spec.validate().map_err(|e| crate::UsageError(e.to_string()))?;
    Ok(spec)
}

/// Synthetic news, prices, weights and planted labels, plus the spec that made them.
pub fn synth(spec: &GeneratorSpecF64, dir: &Path) -> Result<()> {
    let data = generate(spec)?;
    let dir = out_dir(dir)?;
    write_file(&dir, "news.csv", |w| Ok(write_news_csv(&data.corpus, w)?))?;
    write_file(&dir, "prices.csv", |w| Ok(write_prices_csv(&data.prices, w)?))?;
    write_file(&dir, "weights.csv", |w| Ok(write_weight_table_csv(&data.weights, w)?))?;
    write_file(&dir, "labels.csv", |w| Ok(data.write_labels_csv(w)?))?;
    write_file(&dir, "generator.toml", |w| {
        writeln!(w, "schema = \"{SYNTH_SCHEMA}\"")?;
        w.write_all(toml::to_string(spec)?.as_bytes())?;
        Ok(())
    })?;
    info!(
        "synth: {} tickers, {} days, {} articles written to {}",
        spec.n_tickers,
        spec.days,
        data.corpus.len(),
        dir.display()
    );
    Ok(())
}
