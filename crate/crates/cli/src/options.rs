use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use hypesent::forecasting::LogisticOptions;
use hypesent::hype_measure::{DEFAULT_HYPE_BASELINE, DEFAULT_HYPE_THRESHOLD, DEFAULT_HYPE_WINDOW, DEFAULT_KAPPA};
use hypesent::market_data::DEFAULT_VOL_WINDOW;
use hypesent::news_ingest::DEFAULT_DEDUP_THRESHOLD;
use hypesent::sentiment_engine::{DEFAULT_MEMORY_CUTOFF, DEFAULT_NEUTRAL_BAND};
use hypesent::{
    HypeConfig, MeasureMode, ModelKind, PipelineConfigF64, SentimentParamsF64, SplitMode, SplitSpec, SweepConfig,
    Target,
};
use serde::Deserialize;

use crate::UsageError;

/// Schema id every run config file must declare.
pub const RUN_SCHEMA: &str = "hypesent.run/1";

/// Weight table used when none is configured.
pub const BUILTIN_APPENDIX_A: &str = "builtin:appendix_a";

/// Run settings shared by `ingest`, `score`, `forecast` and `hype`. The same keys
/// (snake_case) appear in the config file; a flag wins over the file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Flat TOML run config; must set `schema = "hypesent.run/1"`.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub schema: Option<String>,

    /// News CSV (`date,ticker,source,title,score`).
    #[arg(long)]
    pub news: Option<PathBuf>,
    /// Prices CSV (`date,ticker,close`).
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Weight table CSV, or `builtin:appendix_a`.
    #[arg(long)]
    pub weights: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,
    /// `date,sent` CSV scored directly by `score`, bypassing the corpus.
    #[arg(long)]
    pub sent_input: Option<PathBuf>,

    /// Parameter set `w_today,w_past1,w_past2,w_past3`; repeatable.
    #[arg(long = "params", value_name = "W0,W1,W2,W3")]
    pub param_sets: Option<Vec<String>>,
    #[arg(long)]
    pub neutral_band: Option<f64>,
    #[arg(long)]
    pub memory_cutoff: Option<f64>,
    /// Grid values for `w_today`; any grid key turns the grid on.
    #[arg(long, value_delimiter = ',')]
    pub grid_w_today: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_w_past1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_w_past2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_w_past3: Option<Vec<f64>>,

    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// `random` or `chronological`.
    #[arg(long)]
    pub split_mode: Option<String>,
    /// Seeds `0..n_states` are swept.
    #[arg(long)]
    pub n_states: Option<u64>,
    /// `return_direction` or `volatility_direction`.
    #[arg(long)]
    pub target: Option<String>,
    /// `off`, `sector_reweight` or `three_state`.
    #[arg(long)]
    pub measure: Option<String>,
    /// `lda`, `logistic` or `ols`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub hype_window: Option<usize>,
    #[arg(long)]
    pub hype_baseline: Option<usize>,
    #[arg(long)]
    pub hype_threshold: Option<f64>,
    /// Smallest denominator for relative sentiment moves.
    #[arg(long)]
    pub hype_sentiment_floor: Option<f64>,
    #[arg(long)]
    pub vol_window: Option<usize>,
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($field:ident),* $(,)?) => {
        RunOptions {
            config: $a.config,
            schema: $b.schema,
            $($field: $a.$field.or($b.$field),)*
        }
    };
}

impl RunOptions {
    /// Flags over the config file named by `--config`, if any.
    pub fn load(self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config_file(&path)?;
        Ok(self.over(file))
    }

    fn over(self, file: Self) -> Self {
        let flags = self;
        prefer!(flags, file;
            news, prices, weights, out_dir, sent_input, param_sets, neutral_band, memory_cutoff,
            grid_w_today, grid_w_past1, grid_w_past2, grid_w_past3, train_frac, val_frac, test_frac,
            split_mode, n_states, target, measure, model, kappa, hype_window, hype_baseline,
            hype_threshold, hype_sentiment_floor, vol_window, dedup_threshold,
        )
    }
}

/// Parse a run config and make its relative paths relative to the file.
fn read_config_file(path: &Path) -> Result<RunOptions> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut opts: RunOptions =
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    match opts.schema.as_deref() {
        Some(RUN_SCHEMA) => {}
        Some(other) => {
            return Err(UsageError(format!(
                "config {}: schema `{other}` is not `{RUN_SCHEMA}`",
                path.display()
            ))
            .into())
        }
        None => {
            return Err(UsageError(format!(
                "config {}: missing `schema = \"{RUN_SCHEMA}\"`",
                path.display()
            ))
            .into())
        }
    }
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut opts.news,
        &mut opts.prices,
        &mut opts.out_dir,
        &mut opts.sent_input,
    ]
    .into_iter()
    .flatten()
    {
        *p = base.join(&*p);
    }
    if let Some(w) = &mut opts.weights {
        if !w.starts_with("builtin:") {
            *w = base.join(&*w).to_string_lossy().into_owned();
        }
    }
    Ok(opts)
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    AppendixA,
    File(PathBuf),
}

/// Validated run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub news: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub weights: WeightSource,
    pub out_dir: PathBuf,
    pub sent_input: Option<PathBuf>,
    pub param_sets: Vec<SentimentParamsF64>,
    /// `Some` when any grid key was given; never empty.
    pub grid: Option<Vec<SentimentParamsF64>>,
    pub split: SplitSpec,
    pub n_states: u64,
    pub target: Target,
    pub measure: MeasureMode,
    pub model: ModelKind,
    pub kappa: f64,
    pub hype: HypeConfig<f64>,
    pub vol_window: usize,
    pub dedup_threshold: f64,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_named<T: std::str::FromStr<Err = hypesent::Error>>(value: Option<&str>, default: T) -> Result<T> {
    match value {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e: hypesent::Error| usage(e.to_string())),
    }
}

fn parse_param_set(text: &str, template: &SentimentParamsF64) -> Result<SentimentParamsF64> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("parameter set `{text}` is not four numbers")))?;
    let [w_today, w_past1, w_past2, w_past3] = values[..] else {
        return Err(usage(format!("parameter set `{text}` needs exactly four weights")));
    };
    Ok(SentimentParamsF64 {
        w_today,
        w_past1,
        w_past2,
        w_past3,
        ..template.clone()
    })
}

impl RunConfig {
    pub fn resolve(opts: RunOptions) -> Result<Self> {
        let template = SentimentParamsF64 {
            neutral_band: opts.neutral_band.unwrap_or(DEFAULT_NEUTRAL_BAND),
            memory_cutoff: opts.memory_cutoff.unwrap_or(DEFAULT_MEMORY_CUTOFF),
            ..SentimentParamsF64::default()
        };
        let param_sets = match &opts.param_sets {
            None => {
                let base = PipelineConfigF64::default().param_sets[0].clone();
                vec![SentimentParamsF64 {
                    neutral_band: template.neutral_band,
                    memory_cutoff: template.memory_cutoff,
                    ..base
                }]
            }
            Some(sets) => sets
                .iter()
                .map(|s| parse_param_set(s, &template))
                .collect::<Result<_>>()?,
        };
        if param_sets.is_empty() {
            return Err(usage("param_sets is empty"));
        }
        for p in &param_sets {
            p.validate().map_err(|e| usage(e.to_string()))?;
        }

        let axes = [
            &opts.grid_w_today,
            &opts.grid_w_past1,
            &opts.grid_w_past2,
            &opts.grid_w_past3,
        ];
        let grid = if axes.iter().any(|a| a.is_some()) {
            let p0 = &param_sets[0];
            let pick = |axis: &Option<Vec<f64>>, fallback: f64| axis.clone().unwrap_or_else(|| vec![fallback]);
            let grid = SentimentParamsF64::grid(
                &template,
                &pick(axes[0], p0.w_today),
                &pick(axes[1], p0.w_past1),
                &pick(axes[2], p0.w_past2),
                &pick(axes[3], p0.w_past3),
            );
            if grid.is_empty() {
                return Err(usage("parameter grid is empty"));
            }
            for p in &grid {
                p.validate().map_err(|e| usage(format!("grid entry: {e}")))?;
            }
            Some(grid)
        } else {
            None
        };

        let defaults = SplitSpec::default();
        let split = SplitSpec {
            train_frac: opts.train_frac.unwrap_or(defaults.train_frac),
            val_frac: opts.val_frac.unwrap_or(defaults.val_frac),
            test_frac: opts.test_frac.unwrap_or(defaults.test_frac),
            seed: 0,
            mode: match opts.split_mode.as_deref() {
                None | Some("random") => SplitMode::Random,
                Some("chronological") => SplitMode::Chronological,
                Some(other) => return Err(usage(format!("unknown split mode `{other}`"))),
            },
        };
        split.validate().map_err(|e| usage(e.to_string()))?;

        let n_states = opts.n_states.unwrap_or(SweepConfig::default().n_states);
        if n_states == 0 {
            return Err(usage("n_states must be at least 1"));
        }
        let kappa = opts.kappa.unwrap_or(DEFAULT_KAPPA);
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(usage(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        let hype = HypeConfig {
            window: opts.hype_window.unwrap_or(DEFAULT_HYPE_WINDOW),
            baseline: opts.hype_baseline.unwrap_or(DEFAULT_HYPE_BASELINE),
            threshold: opts.hype_threshold.unwrap_or(DEFAULT_HYPE_THRESHOLD),
            sentiment_floor: opts
                .hype_sentiment_floor
                .unwrap_or(HypeConfig::<f64>::default().sentiment_floor),
        };
        if hype.window < 1 || hype.baseline < hype.window {
            return Err(usage("need hype_baseline >= hype_window >= 1"));
        }
        if !(hype.threshold > 0.0) {
            return Err(usage("hype_threshold must be positive"));
        }
        if !(hype.sentiment_floor >= 0.0) {
            return Err(usage("hype_sentiment_floor must be nonnegative"));
        }
        let vol_window = opts.vol_window.unwrap_or(DEFAULT_VOL_WINDOW);
        if vol_window < 2 {
            return Err(usage("vol_window must be at least 2"));
        }
        let dedup_threshold = opts.dedup_threshold.unwrap_or(DEFAULT_DEDUP_THRESHOLD);
        if !(0.0..=1.0).contains(&dedup_threshold) {
            return Err(usage("dedup_threshold must lie in [0, 1]"));
        }
        let weights = match opts.weights.as_deref() {
            None | Some(BUILTIN_APPENDIX_A) => WeightSource::AppendixA,
            Some(other) if other.starts_with("builtin:") => {
                return Err(usage(format!("unknown builtin weight table `{other}`")))
            }
            Some(path) => WeightSource::File(PathBuf::from(path)),
        };

        Ok(Self {
            news: opts.news,
            prices: opts.prices,
            weights,
            out_dir: opts.out_dir.unwrap_or_else(|| PathBuf::from("hypesent_out")),
            sent_input: opts.sent_input,
            param_sets,
            grid,
            split,
            n_states,
            target: parse_named(opts.target.as_deref(), Target::ReturnDirection)?,
            measure: parse_named(opts.measure.as_deref(), MeasureMode::Off)?,
            model: parse_named(opts.model.as_deref(), ModelKind::Logistic)?,
            kappa,
            hype,
            vol_window,
            dedup_threshold,
        })
    }

    pub fn require_news(&self) -> Result<&Path> {
        self.news
            .as_deref()
            .ok_or_else(|| usage("no news CSV given (--news or `news`)"))
    }

    pub fn require_prices(&self) -> Result<&Path> {
        self.prices
            .as_deref()
            .ok_or_else(|| usage("no prices CSV given (--prices or `prices`)"))
    }

    /// Pipeline settings for one measure mode.
    pub fn pipeline(&self, measure: MeasureMode) -> PipelineConfigF64 {
        PipelineConfigF64 {
            param_sets: self.param_sets.clone(),
            grid: self.grid.clone().unwrap_or_default(),
            measure,
            kappa: self.kappa,
            hype: self.hype,
            target: self.target,
            vol_window: self.vol_window,
            sweep: SweepConfig {
                split: self.split,
                n_states: self.n_states,
                model: self.model,
                logistic: LogisticOptions::default(),
            },
        }
    }
}
