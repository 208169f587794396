//! Direction forecasting from sentiment indicators: two-class LDA, logistic
//! regression (IRLS), OLS, train/validation/test splitting, the random-state
//! selection sweep and classification reports.

mod lda;
mod linalg;
mod logistic;
mod ols;
mod report;
mod sweep;

pub use lda::{lda_fit, lda_predict, LdaModel};
pub use logistic::{logistic_fit, logistic_predict, LogisticModel, LogisticOptions};
pub use ols::{ols_fit, OlsFit};
pub use report::{classification_report, AverageRow, ClassMetrics, ClassificationReport};
pub use sweep::{random_state_sweep, validation_scorer, SweepConfig, SweepOutcome};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rows are dates, columns are indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<T>>,
    pub targets: Vec<u8>,
    pub dates: Vec<NaiveDate>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<T>>,
        targets: Vec<u8>,
        dates: Vec<NaiveDate>,
    ) -> Result<Self> {
        if features.len() != targets.len() || dates.len() != targets.len() {
            return Err(Error::Alignment(format!(
                "{} feature rows, {} targets, {} dates",
                features.len(),
                targets.len(),
                dates.len()
            )));
        }
        if let Some(row) = features.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::Alignment(format!(
                "row {row} has {} features, expected {}",
                features[row].len(),
                feature_names.len()
            )));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features contain non-finite values".into()));
        }
        if targets.iter().any(|t| *t > 1) {
            return Err(Error::InvalidArgument("targets must be 0 or 1".into()));
        }
        Ok(Self {
            feature_names,
            features,
            targets,
            dates,
        })
    }

    /// Single-feature dataset with synthetic consecutive dates.
    pub fn from_column(name: &str, values: &[T], targets: &[u8]) -> Result<Self> {
        let origin = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..values.len())
            .map(|i| origin + chrono::Days::new(i as u64))
            .collect();
        Self::new(
            vec![name.to_string()],
            values.iter().map(|v| vec![*v]).collect(),
            targets.to_vec(),
            dates,
        )
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
            dates: rows.iter().map(|&i| self.dates[i]).collect(),
        }
    }

    /// Keep only the named column.
    pub fn column(&self, name: &str) -> Result<Self> {
        let j = self
            .feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown indicator {name}")))?;
        Ok(Self {
            feature_names: vec![name.to_string()],
            features: self.features.iter().map(|r| vec![r[j]]).collect(),
            targets: self.targets.clone(),
            dates: self.dates.clone(),
        })
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.targets.iter().filter(|t| **t == 1).count();
        [self.len() - ones, ones]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Shuffle rows with the seed, then slice.
    Random,
    /// Slice in date order; the seed is irrelevant.
    Chronological,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::Random => "random",
            SplitMode::Chronological => "chronological",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 0,
            mode: SplitMode::Random,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(*f > 0.0)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions {fr:?} must be positive and sum to 1"
            )));
        }
        Ok(())
    }

    /// (train, validation, test) sizes for `n` rows.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n_train = (n as f64 * self.train_frac).round() as usize;
        let n_val = (n as f64 * self.val_frac).round() as usize;
        let n_val = n_val.min(n.saturating_sub(n_train));
        (n_train, n_val, n - n_train - n_val)
    }
}

/// Minimum rows accepted by [`split`].
pub const MIN_SPLIT_ROWS: usize = 10;

/// Disjoint train/validation/test cover of the rows. Each part keeps its rows in
/// their original order.
pub fn split<T: Scalar>(dataset: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
    spec.validate()?;
    let n = dataset.len();
    if n < MIN_SPLIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "splitting needs at least {MIN_SPLIT_ROWS} rows, got {n}"
        )));
    }
    let (n_train, n_val, n_test) = spec.sizes(n);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::InsufficientData(format!(
            "split of {n} rows leaves an empty part ({n_train}/{n_val}/{n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    match spec.mode {
        SplitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            order.shuffle(&mut rng);
        }
        SplitMode::Chronological => order.sort_by_key(|&i| (dataset.dates[i], i)),
    }
    let mut parts = [
        order[..n_train].to_vec(),
        order[n_train..n_train + n_val].to_vec(),
        order[n_train + n_val..].to_vec(),
    ];
    if spec.mode == SplitMode::Random {
        for p in &mut parts {
            p.sort_unstable();
        }
    }
    Ok((
        dataset.subset(&parts[0]),
        dataset.subset(&parts[1]),
        dataset.subset(&parts[2]),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lda,
    Logistic,
    /// Linear probability model: OLS on the 0/1 label, predicting 1 when the fit is >= 0.5.
    Ols,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lda => "lda",
            ModelKind::Logistic => "logistic",
            ModelKind::Ols => "ols",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(Self::Lda),
            "logistic" => Ok(Self::Logistic),
            "ols" => Ok(Self::Ols),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel<T> {
    Lda(LdaModel<T>),
    Logistic(LogisticModel<T>),
    Ols(OlsFit<T>),
}

impl<T: Scalar> FittedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Lda(_) => ModelKind::Lda,
            FittedModel::Logistic(_) => ModelKind::Logistic,
            FittedModel::Ols(_) => ModelKind::Ols,
        }
    }

    pub fn predict(&self, features: &[Vec<T>]) -> Vec<u8> {
        match self {
            FittedModel::Lda(m) => lda_predict(m, features),
            FittedModel::Logistic(m) => logistic_predict(m, features),
            FittedModel::Ols(m) => features
                .iter()
                .map(|x| u8::from(m.predict_one(x) >= T::lit(0.5)))
                .collect(),
        }
    }

    /// Intercept first, then one coefficient per feature.
    pub fn coefficients(&self) -> Vec<T> {
        match self {
            FittedModel::Lda(m) => std::iter::once(-m.threshold)
                .chain(m.direction.iter().copied())
                .collect(),
            FittedModel::Logistic(m) => m.coefficients(),
            FittedModel::Ols(m) => m.coefficients.clone(),
        }
    }

    /// Fit `kind` on a training set.
    pub fn fit(kind: ModelKind, train: &Dataset<T>, logistic: &LogisticOptions) -> Result<Self> {
        Ok(match kind {
            ModelKind::Lda => FittedModel::Lda(lda_fit(train)?),
            ModelKind::Logistic => FittedModel::Logistic(logistic_fit(train, logistic)?),
            ModelKind::Ols => {
                if train.class_counts().contains(&0) {
                    return Err(Error::DegenerateClasses);
                }
                let y: Vec<T> = train.targets.iter().map(|t| T::from_u8(*t).unwrap()).collect();
                FittedModel::Ols(ols_fit(&train.features, &y)?)
            }
        })
    }

    /// Accuracy for classifiers, R² on `data` for OLS.
    pub fn score(&self, data: &Dataset<T>) -> Result<T> {
        match self {
            FittedModel::Ols(m) => {
                let y: Vec<T> = data.targets.iter().map(|t| T::from_u8(*t).unwrap()).collect();
                m.r_squared_on(&data.features, &y)
            }
            _ => Ok(accuracy(&data.targets, &self.predict(&data.features))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: FittedModel<T>,
    /// Validation accuracy (classifiers) or validation R² (OLS).
    pub validation_score: T,
    pub seed: u64,
}

impl<T: Scalar> FitResult<T> {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }
}

pub fn accuracy<T: Scalar>(y_true: &[u8], y_pred: &[u8]) -> T {
    if y_true.is_empty() {
        return T::zero();
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    T::from_count(hits) / T::from_count(y_true.len())
}

/// Per-column mean and population standard deviation.
pub(crate) fn column_moments<T: Scalar>(rows: &[Vec<T>], dim: usize) -> (Vec<T>, Vec<T>) {
    let n = T::from_count(rows.len().max(1));
    let mut mean = vec![T::zero(); dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m = *m + *v;
        }
    }
    for m in &mut mean {
        *m = *m / n;
    }
    let mut sd = vec![T::zero(); dim];
    for r in rows {
        for ((s, v), m) in sd.iter_mut().zip(r).zip(&mean) {
            let d = *v - *m;
            *s = *s + d * d;
        }
    }
    for s in &mut sd {
        *s = (*s / n).sqrt();
    }
    (mean, sd)
}
