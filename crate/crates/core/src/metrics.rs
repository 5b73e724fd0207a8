//! Forecast error and correlation measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Running mean absolute percentage error.
///
/// Terms whose observed value is zero cannot be expressed as a percentage;
/// they are left out of the mean and counted in `n_skipped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    sum: f64,
    pub n_terms: usize,
    pub n_skipped: usize,
}

impl Mape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<T: Scalar>(&mut self, observed: T, forecast: T) {
        if observed == T::zero() {
            self.n_skipped += 1;
            return;
        }
        let term = ((observed - forecast) / observed).abs();
        self.sum += term.to_f64_lossy();
        self.n_terms += 1;
    }

    pub fn merge(&mut self, other: &Mape) {
        self.sum += other.sum;
        self.n_terms += other.n_terms;
        self.n_skipped += other.n_skipped;
    }

    /// Percentage value, `None` when no term was counted.
    pub fn value(&self) -> Option<f64> {
        (self.n_terms > 0).then(|| self.sum / self.n_terms as f64 * 100.0)
    }
}

/// MAPE in percent over paired slices.
pub fn mape<T: Scalar>(observed: &[T], forecast: &[T]) -> Mape {
    assert_eq!(observed.len(), forecast.len());
    let mut m = Mape::new();
    for (&o, &f) in observed.iter().zip(forecast) {
        m.add(o, f);
    }
    m
}

/// Pearson correlation coefficient. Errors when either side is constant.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two equal-length series of at least 2 points (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Squared Pearson correlation.
pub fn r_squared<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    pearson(x, y).map(|r| r * r)
}

/// Fractional ranks (ties share the mean rank).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&ranks(x), &ranks(y))
}
