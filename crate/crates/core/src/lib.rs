//! News sentiment scoring with hype-adjusted probability measures.
//!
//! The crate turns a scored news corpus and closing prices into daily sentiment
//! indicators (count ratio, weighted average, sign-shift compound score), detects
//! over- and under-hyped tickers, reweights the sector with Radon-Nikodym
//! densities, and forecasts return or volatility direction with LDA, logistic
//! regression or OLS selected over a random-state sweep.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` or `f32`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forecasting;
pub mod hype_measure;
pub mod market_data;
pub mod news_ingest;
pub mod pipeline;
pub mod scalar;
pub mod sentiment_engine;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use forecasting::{
    ClassificationReport, Dataset, FitResult, ModelKind, SplitMode, SplitSpec, SweepConfig, SweepOutcome,
};
pub use hype_measure::{DiscreteMeasure, HypeConfig, HypeReport, HypeState, RNWeights};
pub use market_data::{PricePoint, ReturnSeries, VolatilitySeries};
pub use news_ingest::{BiasVector, Corpus, NewsArticle, TickerWeightTable};
pub use pipeline::{MeasureMode, PipelineConfig, PipelineInputs, Target};
pub use sentiment_engine::{SentimentParams, SentimentSeries};
pub use synthetic::{GeneratorSpec, SyntheticData};

pub type CorpusF64 = Corpus<f64>;
pub type NewsArticleF64 = NewsArticle<f64>;
pub type PricePointF64 = PricePoint<f64>;
pub type TickerWeightTableF64 = TickerWeightTable<f64>;
pub type SentimentParamsF64 = SentimentParams<f64>;
pub type SentimentSeriesF64 = SentimentSeries<f64>;
pub type DiscreteMeasureF64 = DiscreteMeasure<f64>;
pub type RNWeightsF64 = RNWeights<f64>;
pub type DatasetF64 = Dataset<f64>;
pub type ClassificationReportF64 = ClassificationReport<f64>;
pub type GeneratorSpecF64 = GeneratorSpec<f64>;
pub type PipelineConfigF64 = PipelineConfig<f64>;
pub type PipelineInputsF64 = PipelineInputs<f64>;

pub type CorpusF32 = Corpus<f32>;
pub type NewsArticleF32 = NewsArticle<f32>;
pub type PricePointF32 = PricePoint<f32>;
pub type TickerWeightTableF32 = TickerWeightTable<f32>;
pub type SentimentParamsF32 = SentimentParams<f32>;
pub type SentimentSeriesF32 = SentimentSeries<f32>;
pub type DiscreteMeasureF32 = DiscreteMeasure<f32>;
pub type RNWeightsF32 = RNWeights<f32>;
pub type DatasetF32 = Dataset<f32>;
pub type ClassificationReportF32 = ClassificationReport<f32>;
pub type GeneratorSpecF32 = GeneratorSpec<f32>;
pub type PipelineConfigF32 = PipelineConfig<f32>;
pub type PipelineInputsF32 = PipelineInputs<f32>;
