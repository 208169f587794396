//! Small dense solves for the normal equations the models produce.

use crate::scalar::Scalar;

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Square<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Square<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.dim + c]
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.dim + c] = self.data[r * self.dim + c] + v;
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn add_diagonal(&mut self, v: T) {
        for i in 0..self.dim {
            self.add_at(i, i, v);
        }
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot is negligible relative to the matrix scale.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(scale > T::zero()) {
            return None;
        }
        let tiny = scale * T::epsilon() * T::from_count(n.max(1)) * T::lit(16.0);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            let pivot = a[pivot_row * n + col];
            if !(pivot.abs() > tiny) {
                return None;
            }
            if pivot_row != col {
                for k in 0..n {
                    a.swap(pivot_row * n + k, col * n + k);
                }
                x.swap(pivot_row, col);
            }
            for row in col + 1..n {
                let f = a[row * n + col] / pivot;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] = a[row * n + k] - f * a[col * n + k];
                }
                x[row] = x[row] - f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for k in col + 1..n {
                acc = acc - a[col * n + k] * x[k];
            }
            x[col] = acc / a[col * n + col];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}
