use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forecasting::{
    classification_report, split, ClassificationReport, Dataset, FitResult, FittedModel, LogisticOptions, ModelKind,
    SplitMode, SplitSpec,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Fractions and mode; the seed is replaced by each swept seed.
    pub split: SplitSpec,
    pub n_states: u64,
    pub model: ModelKind,
    pub logistic: LogisticOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            n_states: 1000,
            model: ModelKind::Logistic,
            logistic: LogisticOptions::default(),
        }
    }
}

/// Best seed for one indicator, with its test-set report.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome<T> {
    pub indicator: String,
    pub best: FitResult<T>,
    pub report: ClassificationReport<T>,
    pub test_accuracy: T,
    pub split_mode: SplitMode,
    /// Seeds whose split or fit failed (for example a single-class training part).
    pub failed_seeds: usize,
}

fn fit_seed<T: Scalar>(data: &Dataset<T>, config: &SweepConfig, seed: u64) -> Option<(FitResult<T>, Dataset<T>)> {
    let (train, val, test) = split(data, &config.split.with_seed(seed)).ok()?;
    let model = FittedModel::fit(config.model, &train, &config.logistic).ok()?;
    let validation_score = model.score(&val).ok()?;
    if !validation_score.is_finite() {
        return None;
    }
    Some((
        FitResult {
            model,
            validation_score,
            seed,
        },
        test,
    ))
}

fn sweep_indicator<T: Scalar>(data: &Dataset<T>, indicator: &str, config: &SweepConfig) -> Result<SweepOutcome<T>> {
    // Chronological splits ignore the seed, so one fit covers every state.
    let n_states = match config.split.mode {
        SplitMode::Chronological => 1,
        SplitMode::Random => config.n_states,
    };
    let fits: Vec<Option<(FitResult<T>, Dataset<T>)>> = (0..n_states)
        .into_par_iter()
        .map(|seed| fit_seed(data, config, seed))
        .collect();
    let failed_seeds = fits.iter().filter(|f| f.is_none()).count();
    let mut best: Option<(FitResult<T>, Dataset<T>)> = None;
    for fit in fits.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some((b, _)) => fit.0.validation_score > b.validation_score,
        };
        if better {
            best = Some(fit);
        }
    }
    let (best, test) = best
        .ok_or_else(|| Error::InsufficientData(format!("no seed produced a usable fit for indicator {indicator}")))?;
    let predicted = best.model.predict(&test.features);
    let report = classification_report(&test.targets, &predicted)?;
    Ok(SweepOutcome {
        indicator: indicator.to_string(),
        test_accuracy: report.accuracy,
        best,
        report,
        split_mode: config.split.mode,
        failed_seeds,
    })
}

/// For each indicator column: split with seeds `0..n_states`, fit, keep the model
/// with the highest validation score (lowest seed on ties), and report it on its
/// own test part.
pub fn random_state_sweep<T: Scalar>(
    dataset: &Dataset<T>,
    indicators: &[String],
    config: &SweepConfig,
) -> Result<Vec<SweepOutcome<T>>> {
    if config.n_states == 0 {
        return Err(Error::InvalidArgument("n_states must be at least 1".into()));
    }
    config.split.validate()?;
    indicators
        .iter()
        .map(|name| sweep_indicator(&dataset.column(name)?, name, config))
        .collect()
}

/// Scorer for [`crate::sentiment_engine::fit_params_grid`]: fit `kind` on the
/// training part of `split` and return its validation score. Unusable splits
/// score negative infinity so they never win.
pub fn validation_scorer<T: Scalar>(
    kind: ModelKind,
    split_spec: SplitSpec,
    logistic: LogisticOptions,
) -> impl Fn(&[T], &[u8]) -> Result<T> + Sync {
    move |values: &[T], labels: &[u8]| {
        let data = Dataset::from_column("sent_all", values, labels)?;
        let config = SweepConfig {
            split: split_spec,
            n_states: 1,
            model: kind,
            logistic,
        };
        Ok(fit_seed(&data, &config, split_spec.seed)
            .map(|(f, _)| f.validation_score)
            .unwrap_or_else(T::neg_infinity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<u8> = x
            .iter()
            .map(|v| u8::from(*v + 1.5 * rng.sample::<f64, _>(StandardNormal) > 0.0))
            .collect();
        Dataset::from_column("s", &x, &y).unwrap()
    }

    fn cfg(n_states: u64, model: ModelKind) -> SweepConfig {
        SweepConfig {
            n_states,
            model,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn single_state_is_single_fit() {
        let d = noisy(120, 1);
        let out = random_state_sweep(&d, &["s".into()], &cfg(1, ModelKind::Lda)).unwrap();
        let (train, val, test) = split(&d, &SplitSpec::default()).unwrap();
        let m = FittedModel::fit(ModelKind::Lda, &train, &LogisticOptions::default()).unwrap();
        assert_eq!(out[0].best.seed, 0);
        assert_eq!(out[0].best.validation_score, m.score(&val).unwrap());
        assert_eq!(out[0].test_accuracy, m.score(&test).unwrap());
    }

    #[test]
    fn best_score_monotone_in_states() {
        let d = noisy(150, 2);
        let mut last = f64::NEG_INFINITY;
        for n in [1, 5, 20, 60] {
            let out = random_state_sweep(&d, &["s".into()], &cfg(n, ModelKind::Logistic)).unwrap();
            assert!(out[0].best.validation_score >= last);
            last = out[0].best.validation_score;
        }
    }

    #[test]
    fn ties_pick_lowest_seed() {
        let d = noisy(100, 3);
        let out = random_state_sweep(&d, &["s".into()], &cfg(40, ModelKind::Lda)).unwrap();
        let best = out[0].best.validation_score;
        for seed in 0..out[0].best.seed {
            if let Some((f, _)) = fit_seed(&d, &cfg(40, ModelKind::Lda), seed) {
                assert!(f.validation_score < best);
            }
        }
    }

    #[test]
    fn repeated_runs_identical() {
        let d = noisy(200, 4);
        let c = cfg(30, ModelKind::Ols);
        assert_eq!(
            random_state_sweep(&d, &["s".into()], &c).unwrap(),
            random_state_sweep(&d, &["s".into()], &c).unwrap()
        );
    }

    #[test]
    fn chronological_mode_fits_once() {
        let d = noisy(80, 5);
        let c = SweepConfig {
            split: SplitSpec {
                mode: SplitMode::Chronological,
                ..SplitSpec::default()
            },
            ..cfg(50, ModelKind::Lda)
        };
        let out = random_state_sweep(&d, &["s".into()], &c).unwrap();
        assert_eq!(out[0].split_mode, SplitMode::Chronological);
        assert_eq!(out[0].report.total(), 16);
    }

    #[test]
    fn zero_states_and_unknown_indicator() {
        let d = noisy(50, 6);
        assert!(random_state_sweep(&d, &["s".into()], &cfg(0, ModelKind::Lda)).is_err());
        assert!(random_state_sweep(&d, &["nope".into()], &cfg(3, ModelKind::Lda)).is_err());
    }

    #[test]
    fn scorer_matches_single_fit() {
        let d = noisy(90, 7);
        let scorer = validation_scorer::<f64>(ModelKind::Lda, SplitSpec::default(), LogisticOptions::default());
        let values: Vec<f64> = d.features.iter().map(|r| r[0]).collect();
        let s = scorer(&values, &d.targets).unwrap();
        let out = random_state_sweep(&d, &["s".into()], &cfg(1, ModelKind::Lda)).unwrap();
        assert_eq!(s, out[0].best.validation_score);
        assert_eq!(scorer(&values, &[1; 90]).unwrap(), f64::NEG_INFINITY);
    }
}
