//! Ordinary least squares with intercept, plus per-column standardization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::scalar::{dot, Scalar};

/// Condition numbers above this raise the conditioning warning.
const ILL_CONDITIONED: f64 = 1e12;

/// Per-column affine map to zero mean and unit variance.
///
/// Columns with zero spread keep a unit scale, so they standardize to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>], ncols: usize) -> Self {
        let n = T::from_usize_lossy(rows.len().max(1));
        let mut means = vec![T::zero(); ncols];
        for row in rows {
            for (m, &x) in means.iter_mut().zip(row) {
                *m = *m + x;
            }
        }
        means.iter_mut().for_each(|m| *m = *m / n);
        let mut stds = vec![T::zero(); ncols];
        for row in rows {
            for ((s, &m), &x) in stds.iter_mut().zip(&means).zip(row) {
                *s = *s + (x - m) * (x - m);
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / n).sqrt();
            if !(*s > T::zero()) || !s.is_finite() {
                *s = T::one();
            }
        }
        Standardizer { means, stds }
    }

    pub fn identity(ncols: usize) -> Self {
        Standardizer {
            means: vec![T::zero(); ncols],
            stds: vec![T::one(); ncols],
        }
    }

    pub fn transform(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<T>]) -> Vec<Vec<T>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Linear model `y = intercept + weights . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct LinearRegression<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    /// Numerical rank of the centered design matrix.
    pub rank: usize,
    /// Set when the design was rank-deficient or badly conditioned and the
    /// minimum-norm pseudo-solution was returned.
    pub ill_conditioned: bool,
}

impl<T: Scalar> LinearRegression<T> {
    /// Fits OLS with an unpenalized intercept.
    pub fn fit(rows: &[Vec<T>], targets: &[T]) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::domain(format!(
                "regression: {} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::domain("regression: no training samples"));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::domain("regression: ragged design matrix"));
        }
        if rows.iter().flatten().chain(targets).any(|x| !x.is_finite()) {
            return Err(Error::domain("regression: non-finite input"));
        }

        let n = T::from_usize_lossy(rows.len());
        let y_mean = targets.iter().copied().sum::<T>() / n;
        let mut x_mean = vec![T::zero(); ncols];
        for row in rows {
            for (m, &x) in x_mean.iter_mut().zip(row) {
                *m = *m + x;
            }
        }
        x_mean.iter_mut().for_each(|m| *m = *m / n);

        let centered: Vec<Vec<T>> = rows
            .iter()
            .map(|r| r.iter().zip(&x_mean).map(|(&x, &m)| x - m).collect())
            .collect();
        let yc: Vec<T> = targets.iter().map(|&y| y - y_mean).collect();

        let (weights, rank, ill) = if ncols == 0 {
            (Vec::new(), 0, false)
        } else {
            let ls = lstsq(&centered, ncols, &yc);
            let ill = ls.rank < ncols || ls.condition > T::lit(ILL_CONDITIONED);
            (ls.solution, ls.rank, ill)
        };
        let intercept = y_mean - dot(&weights, &x_mean);
        Ok(LinearRegression {
            weights,
            intercept,
            rank,
            ill_conditioned: ill,
        })
    }

    pub fn predict(&self, x: &[T]) -> T {
        self.intercept + dot(&self.weights, x)
    }

    pub fn constant(intercept: T, nfeatures: usize) -> Self {
        LinearRegression {
            weights: vec![T::zero(); nfeatures],
            intercept,
            rank: 0,
            ill_conditioned: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exact_plane() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let lr = LinearRegression::fit(&rows, &y).unwrap();
        assert_relative_eq!(lr.intercept, 3.0, epsilon = 1e-10);
        assert_relative_eq!(lr.weights[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(lr.weights[1], -0.5, epsilon = 1e-10);
        assert!(!lr.ill_conditioned);
    }

    #[test]
    fn residuals_orthogonal_to_features() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![t.sin(), (0.3 * t).cos(), t * 0.1]
            })
            .collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * i) % 11) as f64).collect();
        let lr = LinearRegression::fit(&rows, &y).unwrap();
        let resid: Vec<f64> = rows
            .iter()
            .zip(&y)
            .map(|(r, &t)| t - lr.predict(r))
            .collect();
        let scale: f64 = y.iter().map(|v| v.abs()).sum();
        assert!(resid.iter().sum::<f64>().abs() < 1e-9 * scale);
        for j in 0..3 {
            let g: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
            assert!(g.abs() < 1e-6 * scale, "feature {j}: {g}");
        }
    }

    #[test]
    fn constant_target_learns_intercept_only() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![42.0; 10];
        let lr = LinearRegression::fit(&rows, &y).unwrap();
        assert!(lr.weights.iter().all(|w| w.abs() < 1e-12));
        assert_relative_eq!(lr.predict(&[100.0, -3.0]), 42.0, epsilon = 1e-9);
    }

    #[test]
    fn singular_design_flags_warning() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let lr = LinearRegression::fit(&rows, &y).unwrap();
        assert!(lr.ill_conditioned);
        assert_eq!(lr.rank, 1);
        assert_relative_eq!(lr.predict(&[3.0, 6.0]), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn works_in_f32() {
        let rows: Vec<Vec<f32>> = (0..12).map(|i| vec![i as f32]).collect();
        let y: Vec<f32> = (0..12).map(|i| 1.5 * i as f32 - 2.0).collect();
        let lr = LinearRegression::fit(&rows, &y).unwrap();
        assert_relative_eq!(lr.weights[0], 1.5, epsilon = 1e-4);
        assert_relative_eq!(lr.intercept, -2.0, epsilon = 1e-4);
    }

    #[test]
    fn standardizer_handles_constant_column() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let st = Standardizer::fit(&rows, 2);
        assert_eq!(st.transform(&[3.0, 5.0]), vec![1.0, 0.0]);
    }
}
