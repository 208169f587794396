use crate::error::{Error, Result};
use crate::forecasting::linalg::{dot, Square};
use crate::forecasting::{column_moments, Dataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iter: usize,
    /// Converged when every coefficient moves by less than this.
    pub tol: f64,
    /// Largest coefficient magnitude, in standardized units, before the fit is
    /// declared separated and stopped.
    pub coefficient_cap: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            coefficient_cap: 30.0,
        }
    }
}

/// Binary logistic regression fitted on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<T> {
    /// Intercept followed by one weight per feature, all in standardized units.
    pub standardized: Vec<T>,
    pub means: Vec<T>,
    /// Zero for constant columns, which are left out of the fit.
    pub scales: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the data were (quasi-)separable and coefficients hit the cap.
    pub separated: bool,
    /// Set when a Newton system could not be solved and a gradient step was used.
    pub used_gradient_fallback: bool,
}

impl<T: Scalar> LogisticModel<T> {
    fn standardize(&self, x: &[T]) -> Vec<T> {
        std::iter::once(T::one())
            .chain(x.iter().zip(&self.means).zip(&self.scales).map(|((v, m), s)| {
                if *s > T::zero() {
                    (*v - *m) / *s
                } else {
                    T::zero()
                }
            }))
            .collect()
    }

    pub fn probability(&self, x: &[T]) -> T {
        sigmoid(dot(&self.standardized, &self.standardize(x)))
    }

    /// Intercept and slopes in the original feature units.
    pub fn coefficients(&self) -> Vec<T> {
        let mut intercept = self.standardized[0];
        let mut slopes = Vec::with_capacity(self.means.len());
        for (j, (m, s)) in self.means.iter().zip(&self.scales).enumerate() {
            if *s > T::zero() {
                let b = self.standardized[j + 1] / *s;
                intercept = intercept - b * *m;
                slopes.push(b);
            } else {
                slopes.push(T::zero());
            }
        }
        std::iter::once(intercept).chain(slopes).collect()
    }
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Iteratively reweighted least squares on the log-likelihood.
pub fn logistic_fit<T: Scalar>(train: &Dataset<T>, options: &LogisticOptions) -> Result<LogisticModel<T>> {
    let [n0, n1] = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateClasses);
    }
    let dim = train.n_features();
    let (means, sds) = column_moments(&train.features, dim);
    let scales: Vec<T> = sds
        .into_iter()
        .map(|s| if s > T::epsilon() { s } else { T::zero() })
        .collect();
    let mut model = LogisticModel {
        standardized: vec![T::zero(); dim + 1],
        means,
        scales,
        iterations: 0,
        converged: false,
        separated: false,
        used_gradient_fallback: false,
    };
    let design: Vec<Vec<T>> = train.features.iter().map(|x| model.standardize(x)).collect();
    let y: Vec<T> = train.targets.iter().map(|t| T::from_u8(*t).unwrap()).collect();
    let p = dim + 1;
    let active: Vec<bool> = std::iter::once(true)
        .chain(model.scales.iter().map(|s| *s > T::zero()))
        .collect();
    let tol = T::lit(options.tol);
    let cap = T::lit(options.coefficient_cap);
    let min_weight = T::lit(1e-10);
    let n = T::from_count(train.len());

    let beta = &mut model.standardized;
    for iter in 0..options.max_iter {
        let mut grad = vec![T::zero(); p];
        let mut hess = Square::zeros(p);
        for (x, yi) in design.iter().zip(&y) {
            let mu = sigmoid(dot(beta, x));
            let w = (mu * (T::one() - mu)).max(min_weight);
            let r = *yi - mu;
            for a in 0..p {
                grad[a] = grad[a] + x[a] * r;
                for b in 0..p {
                    hess.add_at(a, b, w * x[a] * x[b]);
                }
            }
        }
        // Inactive (constant) columns carry zeros; pin them with a unit diagonal.
        for (a, on) in active.iter().enumerate() {
            if !on {
                hess.add_at(a, a, T::one());
                grad[a] = T::zero();
            }
        }
        let step = match hess.solve(&grad) {
            Some(s) => s,
            None => {
                model.used_gradient_fallback = true;
                grad.iter().map(|g| *g * T::lit(4.0) / n).collect()
            }
        };
        let mut max_change = T::zero();
        for (b, s) in beta.iter_mut().zip(&step) {
            *b = *b + *s;
            max_change = max_change.max(s.abs());
        }
        model.iterations = iter + 1;
        if beta.iter().any(|b| b.abs() > cap) {
            model.separated = true;
            let largest = beta.iter().fold(T::zero(), |m, b| m.max(b.abs()));
            let shrink = cap / largest;
            for b in beta.iter_mut() {
                *b = *b * shrink;
            }
            break;
        }
        if max_change < tol {
            model.converged = true;
            break;
        }
    }
    Ok(model)
}

/// Class 1 when the fitted probability exceeds 0.5.
pub fn logistic_predict<T: Scalar>(model: &LogisticModel<T>, features: &[Vec<T>]) -> Vec<u8> {
    features
        .iter()
        .map(|x| u8::from(model.probability(x) > T::lit(0.5)))
        .collect()
}
