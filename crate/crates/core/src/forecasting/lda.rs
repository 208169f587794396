use crate::error::{Error, Result};
use crate::forecasting::linalg::{dot, Square};
use crate::forecasting::Dataset;
use crate::scalar::Scalar;

/// Two-class Fisher discriminant with pooled within-class covariance.
///
/// Predicts class 1 when `direction · x > threshold`, where
/// `direction = Σ⁻¹ (μ₁ - μ₀)` and
/// `threshold = direction · (μ₀ + μ₁) / 2 - (ln n₁ - ln n₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel<T> {
    pub direction: Vec<T>,
    pub threshold: T,
    pub class_means: [Vec<T>; 2],
    pub priors: [T; 2],
    /// Ridge added to the pooled covariance diagonal (0 when it was invertible).
    pub jitter: T,
}

pub fn lda_fit<T: Scalar>(train: &Dataset<T>) -> Result<LdaModel<T>> {
    let [n0, n1] = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateClasses);
    }
    let dim = train.n_features();
    let mut means = [vec![T::zero(); dim], vec![T::zero(); dim]];
    for (x, y) in train.features.iter().zip(&train.targets) {
        for (m, v) in means[*y as usize].iter_mut().zip(x) {
            *m = *m + *v;
        }
    }
    for (m, n) in means.iter_mut().zip([n0, n1]) {
        let n = T::from_count(n);
        for v in m.iter_mut() {
            *v = *v / n;
        }
    }

    let mut cov = Square::zeros(dim);
    for (x, y) in train.features.iter().zip(&train.targets) {
        let mu = &means[*y as usize];
        for r in 0..dim {
            let dr = x[r] - mu[r];
            for c in 0..dim {
                cov.add_at(r, c, dr * (x[c] - mu[c]));
            }
        }
    }
    let n = n0 + n1;
    let dof = T::from_count(if n > 2 { n - 2 } else { n });
    for v in &mut cov.data {
        *v = *v / dof;
    }

    let diff: Vec<T> = means[1].iter().zip(&means[0]).map(|(a, b)| *a - *b).collect();
    let (direction, jitter) = match cov.solve(&diff) {
        Some(w) => (w, T::zero()),
        None => {
            let trace = cov.trace();
            let scale = if trace > T::zero() {
                trace / T::from_count(dim)
            } else {
                T::one()
            };
            let jitter = T::lit(1e-6) * scale;
            let mut ridged = cov.clone();
            ridged.add_diagonal(jitter);
            let w = ridged.solve(&diff).unwrap_or_else(|| vec![T::zero(); dim]);
            (w, jitter)
        }
    };
    let midpoint: Vec<T> = means[0]
        .iter()
        .zip(&means[1])
        .map(|(a, b)| (*a + *b) / T::lit(2.0))
        .collect();
    let log_prior_ratio = T::from_count(n1).ln() - T::from_count(n0).ln();
    let threshold = dot(&direction, &midpoint) - log_prior_ratio;
    let total = T::from_count(n);
    Ok(LdaModel {
        direction,
        threshold,
        class_means: means,
        priors: [T::from_count(n0) / total, T::from_count(n1) / total],
        jitter,
    })
}

pub fn lda_predict<T: Scalar>(model: &LdaModel<T>, features: &[Vec<T>]) -> Vec<u8> {
    features
        .iter()
        .map(|x| u8::from(dot(&model.direction, x) > model.threshold))
        .collect()
}
