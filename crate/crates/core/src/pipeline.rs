//! End-to-end wiring: aggregation weights under a measure mode, sentiment
//! indicators on the sector's trading days, aligned direction targets, and the
//! forecasting sweep.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecasting::{random_state_sweep, validation_scorer, Dataset, SweepConfig, SweepOutcome};
use crate::hype_measure::{
    build_rn_weights, change_measure, detect_hype, sector_reweight, DiscreteMeasure, HypeConfig, HypeReport, HypeState,
    DEFAULT_KAPPA,
};
use crate::market_data::{
    direction_labels, rolling_volatility, sector_returns, LabelMode, PricePoint, DEFAULT_VOL_WINDOW, TRADING_DAYS,
};
use crate::news_ingest::{news_count_weights, Corpus, TickerWeightTable};
use crate::scalar::Scalar;
use crate::sentiment_engine::{
    baseline_series, daily_sentiment, fit_params_grid, sent_all_series, ticker_score_table, GridFit, SentimentParams,
    SentimentSeries,
};

/// Which weights aggregate per-ticker scores into the daily score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// Raw news-count shares.
    Off,
    /// News shares reweighted by `z = capital / news`.
    SectorReweight,
    /// Tickers as states under the news-share measure, densities from detected hype.
    ThreeState,
}

impl fmt::Display for MeasureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureMode::Off => "off",
            MeasureMode::SectorReweight => "sector_reweight",
            MeasureMode::ThreeState => "three_state",
        })
    }
}

impl FromStr for MeasureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "sector_reweight" => Ok(Self::SectorReweight),
            "three_state" => Ok(Self::ThreeState),
            other => Err(Error::InvalidArgument(format!("unknown measure mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// 1 when the sector log return is positive.
    ReturnDirection,
    /// 1 when rolling sector volatility rose from the previous day.
    VolatilityDirection,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::ReturnDirection => "return_direction",
            Target::VolatilityDirection => "volatility_direction",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "return_direction" => Ok(Self::ReturnDirection),
            "volatility_direction" => Ok(Self::VolatilityDirection),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`"))),
        }
    }
}

/// Corpus, prices and the sector weight table.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInputs<T> {
    pub corpus: Corpus<T>,
    pub prices: BTreeMap<String, Vec<PricePoint<T>>>,
    pub weights: TickerWeightTable<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T> {
    /// Each set yields one `adjusted_p<k>` indicator.
    pub param_sets: Vec<SentimentParams<T>>,
    /// When non-empty, the best entry by validation score yields `optimized`.
    pub grid: Vec<SentimentParams<T>>,
    pub measure: MeasureMode,
    pub kappa: T,
    pub hype: HypeConfig<T>,
    pub target: Target,
    pub vol_window: usize,
    pub sweep: SweepConfig,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            param_sets: vec![SentimentParams::with_weights(
                T::one(),
                T::lit(0.2),
                T::lit(0.2),
                T::lit(0.5),
            )],
            grid: Vec::new(),
            measure: MeasureMode::Off,
            kappa: T::lit(DEFAULT_KAPPA),
            hype: HypeConfig::default(),
            target: Target::ReturnDirection,
            vol_window: DEFAULT_VOL_WINDOW,
            sweep: SweepConfig::default(),
        }
    }
}

/// Aggregation weights under a measure mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureWeights<T> {
    pub mode: MeasureMode,
    /// News-count shares of the priced, listed tickers.
    pub news: BTreeMap<String, T>,
    pub weights: BTreeMap<String, T>,
    /// Density per ticker; empty in `Off` mode.
    pub z: BTreeMap<String, T>,
    /// Present in `ThreeState` mode.
    pub hype: Option<HypeReport<T>>,
    /// The balancing state in `ThreeState` mode.
    pub level: Option<String>,
}

/// Indicator matrix and everything that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData<T> {
    pub dataset: Dataset<T>,
    pub weights: MeasureWeights<T>,
    /// Compound-score series per parameter-set id (`p0`, `p1`, ..., `optimized`).
    pub series: Vec<(String, SentimentSeries<T>)>,
    pub grid_fit: Option<GridFit<T>>,
    /// Indicators left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun<T> {
    pub prepared: PreparedData<T>,
    pub outcomes: Vec<SweepOutcome<T>>,
}

/// Listed tickers that have prices.
fn priced_tickers<T: Scalar>(inputs: &PipelineInputs<T>) -> Result<Vec<String>> {
    let tickers: Vec<String> = inputs
        .weights
        .tickers()
        .into_iter()
        .filter(|t| inputs.prices.contains_key(t))
        .collect();
    if tickers.is_empty() {
        return Err(Error::Alignment("no ticker in the weight table has prices".into()));
    }
    Ok(tickers)
}

/// Price dates shared by every priced, listed ticker.
pub fn trading_axis<T: Scalar>(inputs: &PipelineInputs<T>) -> Result<Vec<NaiveDate>> {
    let tickers = priced_tickers(inputs)?;
    let mut common: BTreeSet<NaiveDate> = inputs.prices[&tickers[0]].iter().map(|p| p.date).collect();
    for t in &tickers[1..] {
        let dates: BTreeSet<NaiveDate> = inputs.prices[t].iter().map(|p| p.date).collect();
        common = common.intersection(&dates).copied().collect();
    }
    if common.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "tickers share {} price dates; at least 2 are needed",
            common.len()
        )));
    }
    Ok(common.into_iter().collect())
}

/// Per-ticker daily score series, keyed by ticker then date.
pub fn ticker_sentiment<T: Scalar>(
    corpus: &Corpus<T>,
    params: &SentimentParams<T>,
) -> BTreeMap<String, BTreeMap<NaiveDate, T>> {
    let mut out: BTreeMap<String, BTreeMap<NaiveDate, T>> = BTreeMap::new();
    for (date, scores) in ticker_score_table(corpus, params) {
        for (ticker, s) in scores {
            out.entry(ticker).or_default().insert(date, s);
        }
    }
    out
}

fn restrict<T: Scalar>(map: &BTreeMap<String, T>, keys: &[String]) -> BTreeMap<String, T> {
    keys.iter()
        .filter_map(|k| map.get(k).map(|v| (k.clone(), *v)))
        .collect()
}

/// Weights used to aggregate ticker scores under `mode`.
pub fn measure_weights<T: Scalar>(
    inputs: &PipelineInputs<T>,
    mode: MeasureMode,
    kappa: T,
    hype: &HypeConfig<T>,
    params: &SentimentParams<T>,
) -> Result<MeasureWeights<T>> {
    let tickers = priced_tickers(inputs)?;
    let news = news_count_weights(&inputs.corpus, &tickers)?;
    let covered: Vec<String> = news
        .iter()
        .filter(|(_, w)| **w > T::zero())
        .map(|(t, _)| t.clone())
        .collect();
    let mut out = MeasureWeights {
        mode,
        news: news.clone(),
        weights: news.clone(),
        z: BTreeMap::new(),
        hype: None,
        level: None,
    };
    match mode {
        MeasureMode::Off => {}
        MeasureMode::SectorReweight => {
            let capital = restrict(&inputs.weights.capital_weights(), &covered);
            let r = sector_reweight(&restrict(&news, &covered), &capital)?;
            out.z = r.z;
            out.weights = r.adjusted;
        }
        MeasureMode::ThreeState => {
            let p = DiscreteMeasure::new(covered.clone(), covered.iter().map(|t| news[t]).collect())?;
            let prices: BTreeMap<String, Vec<PricePoint<T>>> =
                covered.iter().map(|t| (t.clone(), inputs.prices[t].clone())).collect();
            let report = detect_hype(&inputs.corpus, &prices, &ticker_sentiment(&inputs.corpus, params), hype)?;
            let states = report.states();
            let pick_level = |neutral_only: bool| {
                covered
                    .iter()
                    .filter(|t| !neutral_only || states.get(*t) == Some(&HypeState::Neutral))
                    .fold(None::<&String>, |best, t| match best {
                        Some(b) if news[b] >= news[t] => Some(b),
                        _ => Some(t),
                    })
                    .cloned()
            };
            let level = pick_level(true)
                .or_else(|| pick_level(false))
                .expect("covered tickers are nonempty");
            let z = build_rn_weights(&p, &states, &level, kappa)?;
            let pa = change_measure(&p, &z)?;
            out.weights = pa.states().iter().cloned().zip(pa.probs().iter().copied()).collect();
            out.z = z.states.iter().cloned().zip(z.z.iter().copied()).collect();
            out.hype = Some(report);
            out.level = Some(level);
        }
    }
    Ok(out)
}

/// `(feature_date, label)`: the label is the outcome to predict from
/// information available on `feature_date`, the previous trading day.
pub fn aligned_targets<T: Scalar>(
    inputs: &PipelineInputs<T>,
    axis: &[NaiveDate],
    target: Target,
    vol_window: usize,
) -> Result<Vec<(NaiveDate, u8)>> {
    let on_axis: BTreeSet<NaiveDate> = axis.iter().copied().collect();
    let prices: BTreeMap<String, Vec<PricePoint<T>>> = priced_tickers(inputs)?
        .into_iter()
        .map(|t| {
            let s = inputs.prices[&t]
                .iter()
                .filter(|p| on_axis.contains(&p.date))
                .copied()
                .collect();
            (t, s)
        })
        .collect();
    let returns = sector_returns(&prices, &inputs.weights.capital_weights())?;
    let labels = match target {
        Target::ReturnDirection => direction_labels(&returns.entries, LabelMode::Sign)?,
        Target::VolatilityDirection => {
            let vol = rolling_volatility(&returns, vol_window, T::lit(TRADING_DAYS))?;
            direction_labels(&vol.entries, LabelMode::Delta)?
        }
    };
    let position: BTreeMap<NaiveDate, usize> = axis.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    Ok(labels
        .into_iter()
        .filter_map(|(d, y)| {
            let i = position[&d];
            (i > 0).then(|| (axis[i - 1], y))
        })
        .collect())
}

fn values_at<T: Scalar>(series: &[(NaiveDate, T)], dates: &[NaiveDate]) -> Result<Vec<T>> {
    let map: BTreeMap<NaiveDate, T> = series.iter().copied().collect();
    dates
        .iter()
        .map(|d| {
            map.get(d)
                .copied()
                .ok_or_else(|| Error::Alignment(format!("no indicator value on {d}")))
        })
        .collect()
}

/// Indicators on the trading axis, aligned with the configured target.
///
/// Columns: `baseline` (count ratio; dropped if any day has a degenerate
/// denominator), `sent` (weighted daily score), `adjusted_p<k>` per parameter
/// set, and `optimized` when a grid is given.
pub fn prepare<T: Scalar>(inputs: &PipelineInputs<T>, config: &PipelineConfig<T>) -> Result<PreparedData<T>> {
    if config.param_sets.is_empty() {
        return Err(Error::InvalidArgument("at least one parameter set is required".into()));
    }
    let base_params = &config.param_sets[0];
    let axis = trading_axis(inputs)?;
    let weights = measure_weights(inputs, config.measure, config.kappa, &config.hype, base_params)?;
    let targets = aligned_targets(inputs, &axis, config.target, config.vol_window)?;
    let feature_dates: Vec<NaiveDate> = targets.iter().map(|t| t.0).collect();
    let labels: Vec<u8> = targets.iter().map(|t| t.1).collect();

    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut skipped = Vec::new();
    match baseline_series(&inputs.corpus, base_params, &axis) {
        Ok(b) => {
            names.push("baseline".to_string());
            columns.push(values_at(&b, &feature_dates)?);
        }
        Err(e) => skipped.push(("baseline".to_string(), e.to_string())),
    }
    let daily = daily_sentiment(&inputs.corpus, &weights.weights, base_params, &axis)?;
    names.push("sent".to_string());
    columns.push(values_at(&daily, &feature_dates)?);

    let mut series = Vec::new();
    for (k, params) in config.param_sets.iter().enumerate() {
        let d = daily_sentiment(&inputs.corpus, &weights.weights, params, &axis)?;
        let s = sent_all_series(&d, params)?;
        let values: Vec<(NaiveDate, T)> = s.entries.iter().map(|e| (e.date, e.sent_all)).collect();
        names.push(format!("adjusted_p{k}"));
        columns.push(values_at(&values, &feature_dates)?);
        series.push((format!("p{k}"), s));
    }

    let mut grid_fit = None;
    if !config.grid.is_empty() {
        let d = daily_sentiment(&inputs.corpus, &weights.weights, &config.grid[0], &axis)?;
        let split = config.sweep.split;
        let fit = fit_params_grid(
            &d,
            &targets,
            &config.grid,
            validation_scorer(config.sweep.model, split, config.sweep.logistic),
        )?;
        let s = sent_all_series(&d, &fit.params)?;
        let values: Vec<(NaiveDate, T)> = s.entries.iter().map(|e| (e.date, e.sent_all)).collect();
        names.push("optimized".to_string());
        columns.push(values_at(&values, &feature_dates)?);
        series.push(("optimized".to_string(), s));
        grid_fit = Some(fit);
    }

    let rows: Vec<Vec<T>> = (0..feature_dates.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let dataset = Dataset::new(names, rows, labels, feature_dates)?;
    Ok(PreparedData {
        dataset,
        weights,
        series,
        grid_fit,
        skipped,
    })
}

/// [`prepare`], then sweep every indicator.
pub fn forecast<T: Scalar>(inputs: &PipelineInputs<T>, config: &PipelineConfig<T>) -> Result<ForecastRun<T>> {
    let prepared = prepare(inputs, config)?;
    let outcomes = random_state_sweep(&prepared.dataset, &prepared.dataset.feature_names, &config.sweep)?;
    Ok(ForecastRun { prepared, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasting::ModelKind;
    use crate::synthetic::{generate, GeneratorSpec, HypeInjection};

    fn inputs(spec: &GeneratorSpec<f64>) -> PipelineInputs<f64> {
        let d = generate(spec).unwrap();
        PipelineInputs {
            corpus: d.corpus,
            prices: d.prices,
            weights: d.weights,
        }
    }

    fn spec(seed: u64) -> GeneratorSpec<f64> {
        GeneratorSpec {
            seed,
            days: 150,
            ..GeneratorSpec::default()
        }
    }

    fn quick(mode: MeasureMode) -> PipelineConfig<f64> {
        PipelineConfig {
            measure: mode,
            sweep: SweepConfig {
                n_states: 5,
                model: ModelKind::Logistic,
                ..SweepConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn return_targets_align_with_generator_labels() {
        let s = spec(1);
        let data = generate(&s).unwrap();
        let inp = inputs(&s);
        let axis = trading_axis(&inp).unwrap();
        let t = aligned_targets(&inp, &axis, Target::ReturnDirection, 5).unwrap();
        assert_eq!(t.len(), data.labels.len());
        for (k, (d, y)) in t.iter().enumerate() {
            assert_eq!(*d, axis[k]);
            assert_eq!(*y, data.labels[k].1);
        }
        let v = aligned_targets(&inp, &axis, Target::VolatilityDirection, 5).unwrap();
        assert_eq!(v.len(), axis.len() - 6);
    }

    #[test]
    fn sector_reweight_recovers_capital_weights() {
        let s = spec(2);
        let inp = inputs(&s);
        let w = measure_weights(
            &inp,
            MeasureMode::SectorReweight,
            0.2,
            &HypeConfig::default(),
            &SentimentParams::default(),
        )
        .unwrap();
        for (t, c) in s.capital_weights() {
            assert!((w.weights[&t] - c).abs() < 1e-12);
        }
        let off = measure_weights(
            &inp,
            MeasureMode::Off,
            0.2,
            &HypeConfig::default(),
            &SentimentParams::default(),
        )
        .unwrap();
        assert_eq!(off.weights, inp.weights.news_weights());
    }

    #[test]
    fn sector_reweight_sent_equals_driver_without_hype() {
        let s = spec(3);
        let data = generate(&s).unwrap();
        let inp = inputs(&s);
        let cfg = PipelineConfig {
            param_sets: vec![s.params.clone()],
            ..quick(MeasureMode::SectorReweight)
        };
        let p = prepare(&inp, &cfg).unwrap();
        let j = p.dataset.feature_names.iter().position(|n| n == "adjusted_p0").unwrap();
        for (k, row) in p.dataset.features.iter().enumerate() {
            assert!((row[j] - data.driver[k].1).abs() < 1e-12);
        }
    }

    #[test]
    fn three_state_shrinks_hyped_ticker() {
        let s = GeneratorSpec {
            tone_mean: 0.5,
            tone_sd: 0.0,
            ticker_tone_sd: 0.0,
            score_noise: 0.0,
            daily_vol: 0.002,
            hype: Some(HypeInjection {
                ticker: 3,
                start_day: 145,
                end_day: 150,
                multiplier: 5.0,
                tone: 1.5,
            }),
            ..spec(4)
        };
        let inp = inputs(&s);
        let w = measure_weights(
            &inp,
            MeasureMode::ThreeState,
            0.2,
            &HypeConfig::default(),
            &SentimentParams::default(),
        )
        .unwrap();
        let report = w.hype.as_ref().unwrap();
        assert_eq!(report.get("T03").unwrap().hype_state, HypeState::Overhyped);
        assert!(report
            .tickers
            .iter()
            .filter(|t| t.ticker != "T03")
            .all(|t| t.hype_state == HypeState::Neutral));
        assert!((w.z["T03"] - 0.8).abs() < 1e-12);
        assert!(w.weights["T03"] < w.news["T03"]);
        assert!((w.weights.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forecast_reports_every_indicator() {
        let s = spec(5);
        let cfg = PipelineConfig {
            grid: SentimentParams::grid(
                &SentimentParams::default(),
                &[1.0],
                &[0.0, 0.5],
                &[0.0, 0.5],
                &[0.0, 0.5],
            ),
            ..quick(MeasureMode::Off)
        };
        let run = forecast(&inputs(&s), &cfg).unwrap();
        let names: Vec<&str> = run.outcomes.iter().map(|o| o.indicator.as_str()).collect();
        assert!(names.contains(&"sent") && names.contains(&"adjusted_p0") && names.contains(&"optimized"));
        assert_eq!(run.prepared.grid_fit.as_ref().unwrap().scores.len(), 8);
        assert_eq!(forecast(&inputs(&s), &cfg).unwrap(), run);
    }

    #[test]
    fn mode_and_target_names_round_trip() {
        for m in [MeasureMode::Off, MeasureMode::SectorReweight, MeasureMode::ThreeState] {
            assert_eq!(m.to_string().parse::<MeasureMode>().unwrap(), m);
        }
        for t in [Target::ReturnDirection, Target::VolatilityDirection] {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert!("on".parse::<MeasureMode>().is_err());
    }
}
