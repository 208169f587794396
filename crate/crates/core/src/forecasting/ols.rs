use crate::error::{Error, Result};
use crate::forecasting::column_moments;
use crate::forecasting::linalg::{dot, Square};
use crate::scalar::Scalar;

/// Least-squares fit with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<T> {
    /// Intercept followed by one slope per feature.
    pub coefficients: Vec<T>,
    /// In-sample coefficient of determination.
    pub r_squared: T,
    /// Set when the centered design was rank deficient and a ridge was added.
    pub rank_deficient: bool,
}

impl<T: Scalar> OlsFit<T> {
    pub fn predict_one(&self, x: &[T]) -> T {
        self.coefficients[0] + dot(&self.coefficients[1..], x)
    }

    /// `1 - SS_res / SS_tot` on arbitrary data; may be negative out of sample.
    pub fn r_squared_on(&self, x: &[Vec<T>], y: &[T]) -> Result<T> {
        r_squared(y, &x.iter().map(|r| self.predict_one(r)).collect::<Vec<_>>())
    }
}

fn r_squared<T: Scalar>(y: &[T], fitted: &[T]) -> Result<T> {
    if y.is_empty() {
        return Err(Error::RSquaredUndefined);
    }
    let mean = y.iter().copied().sum::<T>() / T::from_count(y.len());
    let ss_tot: T = y.iter().map(|v| (*v - mean) * (*v - mean)).sum();
    if !(ss_tot > T::zero()) {
        return Err(Error::RSquaredUndefined);
    }
    let ss_res: T = y.iter().zip(fitted).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
    Ok(T::one() - ss_res / ss_tot)
}

/// Closed-form least squares on centered data.
pub fn ols_fit<T: Scalar>(x: &[Vec<T>], y: &[T]) -> Result<OlsFit<T>> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} rows but {} targets", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "OLS needs at least 2 rows, got {}",
            x.len()
        )));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Alignment("ragged design matrix".into()));
    }
    let (x_mean, _) = column_moments(x, dim);
    let y_mean = y.iter().copied().sum::<T>() / T::from_count(y.len());
    let mut gram = Square::zeros(dim);
    let mut rhs = vec![T::zero(); dim];
    for (row, yi) in x.iter().zip(y) {
        let c: Vec<T> = row.iter().zip(&x_mean).map(|(v, m)| *v - *m).collect();
        let yc = *yi - y_mean;
        for a in 0..dim {
            rhs[a] = rhs[a] + c[a] * yc;
            for b in 0..dim {
                gram.add_at(a, b, c[a] * c[b]);
            }
        }
    }
    let mut rank_deficient = false;
    let slopes = if dim == 0 {
        Vec::new()
    } else {
        match gram.solve(&rhs) {
            Some(s) => s,
            None => {
                rank_deficient = true;
                let trace = gram.trace();
                let scale = if trace > T::zero() {
                    trace / T::from_count(dim)
                } else {
                    T::one()
                };
                let mut ridged = gram.clone();
                ridged.add_diagonal(T::lit(1e-10) * scale);
                ridged.solve(&rhs).unwrap_or_else(|| vec![T::zero(); dim])
            }
        }
    };
    let intercept = y_mean - dot(&slopes, &x_mean);
    let coefficients: Vec<T> = std::iter::once(intercept).chain(slopes).collect();
    let fitted: Vec<T> = x.iter().map(|r| coefficients[0] + dot(&coefficients[1..], r)).collect();
    let r_squared = r_squared(y, &fitted)?;
    Ok(OlsFit {
        coefficients,
        r_squared,
        rank_deficient,
    })
}
