//! Dense least squares via one-sided Jacobi SVD.
//!
//! The design matrices here are small (tens of columns, at most a few
//! thousand rows), so a straightforward Hestenes sweep is accurate and fast
//! enough, and it returns the minimum-norm solution for rank-deficient
//! systems without any special casing.

use crate::scalar::{dot, Scalar};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(s) V^T` of an `m x n` matrix given as rows.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Left singular vectors stored by column: `u[j]` has length `m`.
    pub u: Vec<Vec<T>>,
    pub singular_values: Vec<T>,
    /// Right singular vectors stored by column: `v[j]` has length `n`.
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Svd<T> {
    pub fn decompose(rows: &[Vec<T>], ncols: usize) -> Self {
        let m = rows.len();
        let n = ncols;
        // Column-major working copy.
        let mut a: Vec<Vec<T>> = (0..n)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut col = vec![T::zero(); n];
                col[j] = T::one();
                col
            })
            .collect();

        let tol = T::epsilon() * T::from_usize_lossy(m.max(1));
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha = dot(&a[p], &a[p]);
                    let beta = dot(&a[q], &a[q]);
                    let gamma = dot(&a[p], &a[q]);
                    if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut a, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }

        let singular_values: Vec<T> = a.iter().map(|col| dot(col, col).sqrt()).collect();
        let u = a
            .into_iter()
            .zip(&singular_values)
            .map(|(col, &s)| {
                if s > T::zero() {
                    col.into_iter().map(|x| x / s).collect()
                } else {
                    vec![T::zero(); m]
                }
            })
            .collect();
        Svd {
            u,
            singular_values,
            v,
        }
    }

    /// Cut-off below which singular values are treated as zero.
    pub fn rank_threshold(&self, m: usize) -> T {
        let smax = self.singular_values.iter().copied().fold(T::zero(), T::max);
        smax * T::epsilon() * T::from_usize_lossy(m.max(self.v.len()).max(1)) * T::lit(10.0)
    }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub solution: Vec<T>,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained singular value.
    pub condition: T,
}

/// Minimum-norm solution of `min ||A x - b||`.
pub fn lstsq<T: Scalar>(rows: &[Vec<T>], ncols: usize, b: &[T]) -> LeastSquares<T> {
    assert_eq!(rows.len(), b.len(), "row count mismatch");
    let svd = Svd::decompose(rows, ncols);
    let cutoff = svd.rank_threshold(rows.len());
    let mut x = vec![T::zero(); ncols];
    let mut rank = 0;
    let mut smax = T::zero();
    let mut smin = T::infinity();
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == T::zero() {
            continue;
        }
        rank += 1;
        smax = smax.max(s);
        smin = smin.min(s);
        let coef = dot(&svd.u[j], b) / s;
        for (xi, &vi) in x.iter_mut().zip(&svd.v[j]) {
            *xi = *xi + coef * vi;
        }
    }
    let condition = if rank == 0 {
        T::infinity()
    } else {
        smax / smin
    };
    LeastSquares {
        solution: x,
        rank,
        condition,
    }
}

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
/// Returns `false` if a pivot is not positive.
pub(crate) fn cholesky<T: Scalar>(a: &mut [Vec<T>]) -> bool {
    let n = a.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - a[j][k] * a[j][k];
        }
        if !(d > T::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v = v - a[i][k] * a[j][k];
            }
            a[i][j] = v / d;
        }
    }
    true
}

/// Solves `L L^T x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve<T: Scalar>(l: &[Vec<T>], b: &mut [T]) {
    let n = l.len();
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v = v - l[i][k] * b[k];
        }
        b[i] = v / l[i][i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v = v - l[k][i] * b[k];
        }
        b[i] = v / l[i][i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reconstructs_matrix() {
        let rows = vec![
            vec![2.0, 0.5, 1.0],
            vec![-1.0, 3.0, 0.0],
            vec![0.0, 1.0, 4.0],
            vec![1.0, 1.0, 1.0],
        ];
        let svd = Svd::decompose(&rows, 3);
        for (i, row) in rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                let rec: f64 = (0..3)
                    .map(|k| svd.u[k][i] * svd.singular_values[k] * svd.v[k][j])
                    .sum();
                assert_relative_eq!(rec, a, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn exact_system() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 7.0]];
        let b = vec![5.0, 11.0, 19.0];
        let ls = lstsq(&rows, 2, &b);
        assert_eq!(ls.rank, 2);
        assert_relative_eq!(ls.solution[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ls.solution[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_gives_min_norm() {
        // Second column duplicates the first: min-norm splits the weight.
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let b = vec![2.0, 4.0, 6.0];
        let ls = lstsq(&rows, 2, &b);
        assert_eq!(ls.rank, 1);
        assert_relative_eq!(ls.solution[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ls.solution[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_round_trip() {
        let mut a = vec![
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ];
        let orig = a.clone();
        assert!(cholesky(&mut a));
        let mut x = vec![1.0, -2.0, 0.5];
        cholesky_solve(&a, &mut x);
        let back: Vec<f64> = orig.iter().map(|r| dot(r, &x)).collect();
        assert_relative_eq!(back[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(back[1], -2.0, epsilon = 1e-12);
        assert_relative_eq!(back[2], 0.5, epsilon = 1e-12);
        assert!(!cholesky(&mut [vec![1.0, 2.0], vec![2.0, 1.0]]));
    }

    #[test]
    fn underdetermined_system() {
        let rows = vec![vec![1.0f32, 2.0, 3.0]];
        let ls = lstsq(&rows, 3, &[14.0]);
        assert_eq!(ls.rank, 1);
        // x = A^T (A A^T)^-1 b = (1,2,3)
        assert_relative_eq!(ls.solution[2], 3.0, epsilon = 1e-5);
    }
}
