//! Linear epsilon-insensitive support vector regression.
//!
//! Solves
//!
//! ```text
//! min  1/2 |w|^2 + C sum_i (xi_i + xi*_i)
//! s.t. y_i - (w.x_i + b) <= eps + xi_i
//!      (w.x_i + b) - y_i <= eps + xi*_i,   xi, xi* >= 0
//! ```
//!
//! through its dual with sequential minimal optimization over the `2n`
//! multipliers `(alpha, alpha*)`, maximal-violating-pair selection with
//! second-order gain, and the equality constraint `sum(alpha - alpha*) = 0`
//! that comes from the unpenalized bias.
//!
//! SMO alone crawls on the nearly collinear lag features of smooth series,
//! so it is warm-started from a primal-dual interior-point solution. The
//! dual Hessian has rank at most the feature count, which keeps each Newton
//! step cheap through the Woodbury identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::scalar::{dot, Scalar};

/// Floor for non-positive curvature along a working-set direction.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(
        serialize = "T: Serialize",
        deserialize = "T: Scalar + Deserialize<'de>"
    ),
    default
)]
pub struct SvrParams<T> {
    /// Box constant on every multiplier.
    pub c: T,
    /// Half-width of the insensitive tube.
    pub epsilon: T,
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for SvrParams<T> {
    fn default() -> Self {
        SvrParams {
            c: T::one(),
            epsilon: T::lit(0.1),
            tolerance: T::lit(1e-6).max(T::epsilon() * T::lit(1e3)),
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct LinearSvr<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub alpha: Vec<T>,
    pub alpha_star: Vec<T>,
    pub iterations: usize,
    /// Largest complementary-slackness violation of the returned solution,
    /// measured in target units.
    pub kkt_residual: T,
}

impl<T: Scalar> LinearSvr<T> {
    pub fn fit(rows: &[Vec<T>], targets: &[T], params: &SvrParams<T>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n != targets.len() {
            return Err(Error::domain(format!(
                "svr: {} rows, {} targets",
                n,
                targets.len()
            )));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("svr: ragged design matrix"));
        }
        if !(params.c > T::zero()) || params.epsilon < T::zero() {
            return Err(Error::domain("svr: need C > 0 and epsilon >= 0"));
        }
        if rows.iter().flatten().chain(targets).any(|x| !x.is_finite()) {
            return Err(Error::domain("svr: non-finite input"));
        }

        let kernel: Vec<Vec<T>> = (0..n)
            .map(|i| (0..n).map(|j| dot(&rows[i], &rows[j])).collect())
            .collect();

        let solved = Smo::new(&kernel, targets, params).solve(rows, targets, params)?;
        let (alpha, alpha_star) = solved.alpha.split_at(n);
        let coef: Vec<T> = alpha.iter().zip(alpha_star).map(|(&a, &s)| a - s).collect();
        let mut weights = vec![T::zero(); dim];
        for (row, &c) in rows.iter().zip(&coef) {
            if c != T::zero() {
                for (w, &x) in weights.iter_mut().zip(row) {
                    *w = *w + c * x;
                }
            }
        }
        let mut model = LinearSvr {
            weights,
            bias: -solved.rho,
            alpha: alpha.to_vec(),
            alpha_star: alpha_star.to_vec(),
            iterations: solved.iterations,
            kkt_residual: T::zero(),
        };
        model.kkt_residual = model.kkt_violation(rows, targets, params);
        Ok(model)
    }

    pub fn predict(&self, x: &[T]) -> T {
        dot(&self.weights, x) + self.bias
    }

    /// Maximal violation of the optimality conditions on a training set.
    ///
    /// For each sample with residual `r = y - f(x)`:
    /// `alpha = 0 => r <= eps`, `0 < alpha < C => r = eps`, `alpha = C => r >= eps`,
    /// mirrored for `alpha*` around `-eps`; plus `|sum(alpha - alpha*)|` and the
    /// box constraints.
    pub fn kkt_violation(&self, rows: &[Vec<T>], targets: &[T], params: &SvrParams<T>) -> T {
        let eps = params.epsilon;
        let c = params.c;
        let mut worst = T::zero();
        let mut balance = T::zero();
        for ((row, &y), (&a, &s)) in rows
            .iter()
            .zip(targets)
            .zip(self.alpha.iter().zip(&self.alpha_star))
        {
            let r = y - self.predict(row);
            let upper = if a <= T::zero() {
                (r - eps).max(T::zero())
            } else if a >= c {
                (eps - r).max(T::zero())
            } else {
                (r - eps).abs()
            };
            let lower = if s <= T::zero() {
                (-eps - r).max(T::zero())
            } else if s >= c {
                (r + eps).max(T::zero())
            } else {
                (r + eps).abs()
            };
            let bounds = (-a).max(-s).max(a - c).max(s - c).max(T::zero());
            worst = worst.max(upper).max(lower).max(bounds);
            balance = balance + a - s;
        }
        worst.max(balance.abs())
    }
}

const IPM_MAX_ITERATIONS: usize = 200;
const REFINE_STEPS: usize = 2;

struct Smo<T> {
    c: T,
    max_iterations: usize,
    /// `+1` for `alpha_i`, `-1` for `alpha*_i`.
    sign: Vec<T>,
    /// Signed dual Hessian, `2n x 2n`, row-major.
    q: Vec<T>,
    /// Linear term of the dual objective.
    p: Vec<T>,
    alpha: Vec<T>,
    grad: Vec<T>,
    diag: Vec<T>,
    iterations: usize,
}

struct Solved<T> {
    alpha: Vec<T>,
    rho: T,
    iterations: usize,
}

impl<T: Scalar> Smo<T> {
    fn new(kernel: &[Vec<T>], targets: &[T], params: &SvrParams<T>) -> Self {
        let n = targets.len();
        let m = 2 * n;
        let mut sign = vec![T::one(); m];
        let mut p = vec![T::zero(); m];
        for i in 0..n {
            sign[i + n] = -T::one();
            p[i] = params.epsilon - targets[i];
            p[i + n] = params.epsilon + targets[i];
        }
        let mut q = vec![T::zero(); m * m];
        for a in 0..m {
            for b in 0..m {
                q[a * m + b] = sign[a] * sign[b] * kernel[a % n][b % n];
            }
        }
        let diag = (0..m).map(|t| kernel[t % n][t % n]).collect();
        Smo {
            c: params.c,
            max_iterations: params.max_iterations,
            sign,
            q,
            grad: p.clone(),
            p,
            alpha: vec![T::zero(); m],
            diag,
            iterations: 0,
        }
    }

    /// Starts from the interior-point solution when it converges, from
    /// zero otherwise, and runs SMO to the requested tolerance.
    fn solve(mut self, rows: &[Vec<T>], targets: &[T], params: &SvrParams<T>) -> Result<Solved<T>> {
        let (warm, spent) = interior_point(rows, targets, params);
        self.iterations = spent;
        if let Some(alpha) = warm {
            self.set_alpha(alpha);
        }
        self.run(params.tolerance)?;
        Ok(Solved {
            rho: self.rho(),
            iterations: self.iterations,
            alpha: self.alpha,
        })
    }

    #[inline]
    fn q_row(&self, i: usize) -> &[T] {
        let m = self.sign.len();
        &self.q[i * m..(i + 1) * m]
    }

    #[inline]
    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    #[inline]
    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= T::zero()
    }

    fn set_alpha(&mut self, alpha: Vec<T>) {
        let m = self.sign.len();
        for t in 0..m {
            let row = self.q_row(t);
            let mut g = self.p[t];
            for (s, &a) in alpha.iter().enumerate() {
                if a != T::zero() {
                    g = g + row[s] * a;
                }
            }
            self.grad[t] = g;
        }
        self.alpha = alpha;
    }

    /// Returns the working pair, or `None` plus the current gap when the
    /// gap is below `tolerance`.
    fn select(&self, tolerance: T) -> (Option<(usize, usize)>, T) {
        let tau = T::lit(TAU);
        let mut gmax = T::neg_infinity();
        let mut i_best = None;
        for t in 0..self.sign.len() {
            let up = self.sign[t] > T::zero();
            if up && !self.at_upper(t) && -self.grad[t] >= gmax {
                gmax = -self.grad[t];
                i_best = Some(t);
            } else if !up && !self.at_lower(t) && self.grad[t] >= gmax {
                gmax = self.grad[t];
                i_best = Some(t);
            }
        }
        let Some(i) = i_best else {
            return (None, T::zero());
        };

        let q_i = self.q_row(i);
        let mut gmax2 = T::neg_infinity();
        let mut j_best = None;
        let mut best_gain = T::infinity();
        for t in 0..self.sign.len() {
            let up = self.sign[t] > T::zero();
            let (eligible, grad_diff, val, quad) = if up {
                (
                    !self.at_lower(t),
                    gmax + self.grad[t],
                    self.grad[t],
                    self.diag[i] + self.diag[t] - T::lit(2.0) * self.sign[i] * q_i[t],
                )
            } else {
                (
                    !self.at_upper(t),
                    gmax - self.grad[t],
                    -self.grad[t],
                    self.diag[i] + self.diag[t] + T::lit(2.0) * self.sign[i] * q_i[t],
                )
            };
            if !eligible {
                continue;
            }
            if val >= gmax2 {
                gmax2 = val;
            }
            if grad_diff > T::zero() {
                let q = if quad > T::zero() { quad } else { tau };
                let gain = -(grad_diff * grad_diff) / q;
                if gain <= best_gain {
                    best_gain = gain;
                    j_best = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        match j_best {
            Some(j) if gap >= tolerance => (Some((i, j)), gap),
            _ => (None, gap.max(T::zero())),
        }
    }

    fn run(&mut self, tolerance: T) -> Result<()> {
        let tau = T::lit(TAU);
        let c = self.c;
        loop {
            let (pair, gap) = self.select(tolerance);
            let Some((i, j)) = pair else {
                return Ok(());
            };
            if self.iterations >= self.max_iterations {
                return Err(Error::Convergence {
                    iterations: self.iterations,
                    residual: gap.to_f64_lossy(),
                });
            }
            self.iterations += 1;

            let old_i = self.alpha[i];
            let old_j = self.alpha[j];
            let qij = self.q_row(i)[j];
            let (mut ai, mut aj);
            if self.sign[i] != self.sign[j] {
                let mut quad = self.diag[i] + self.diag[j] + T::lit(2.0) * qij;
                if quad <= T::zero() {
                    quad = tau;
                }
                let delta = (-self.grad[i] - self.grad[j]) / quad;
                let diff = old_i - old_j;
                ai = old_i + delta;
                aj = old_j + delta;
                if diff > T::zero() {
                    if aj < T::zero() {
                        aj = T::zero();
                        ai = diff;
                    }
                } else if ai < T::zero() {
                    ai = T::zero();
                    aj = -diff;
                }
                if diff > T::zero() {
                    if ai > c {
                        ai = c;
                        aj = c - diff;
                    }
                } else if aj > c {
                    aj = c;
                    ai = c + diff;
                }
            } else {
                let mut quad = self.diag[i] + self.diag[j] - T::lit(2.0) * qij;
                if quad <= T::zero() {
                    quad = tau;
                }
                let delta = (self.grad[i] - self.grad[j]) / quad;
                let sum = old_i + old_j;
                ai = old_i - delta;
                aj = old_j + delta;
                if sum > c {
                    if ai > c {
                        ai = c;
                        aj = sum - c;
                    }
                } else if aj < T::zero() {
                    aj = T::zero();
                    ai = sum;
                }
                if sum > c {
                    if aj > c {
                        aj = c;
                        ai = sum - c;
                    }
                } else if ai < T::zero() {
                    ai = T::zero();
                    aj = sum;
                }
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
            let di = ai - old_i;
            let dj = aj - old_j;
            let m = self.sign.len();
            let (qi, qj) = (&self.q[i * m..(i + 1) * m], &self.q[j * m..(j + 1) * m]);
            // Q is symmetric, so rows i and j give column entries too.
            for ((g, &a), &b) in self.grad.iter_mut().zip(qi).zip(qj) {
                *g = *g + a * di + b * dj;
            }
        }
    }

    fn rho(&self) -> T {
        let mut ub = T::infinity();
        let mut lb = T::neg_infinity();
        let mut free = 0usize;
        let mut sum_free = T::zero();
        for t in 0..self.sign.len() {
            let yg = self.sign[t] * self.grad[t];
            let up = self.sign[t] > T::zero();
            if self.at_upper(t) {
                if up {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.at_lower(t) {
                if up {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free = sum_free + yg;
            }
        }
        if free > 0 {
            sum_free / T::from_usize_lossy(free)
        } else {
            (ub + lb) / T::lit(2.0)
        }
    }
}

/// Mehrotra predictor-corrector on the box-constrained dual, followed by a
/// snap of near-bound multipliers. Returns `None` if it fails to converge,
/// along with the number of Newton steps taken.
fn interior_point<T: Scalar>(
    rows: &[Vec<T>],
    targets: &[T],
    params: &SvrParams<T>,
) -> (Option<Vec<T>>, usize) {
    let n = targets.len();
    let m = 2 * n;
    let dim = rows[0].len();
    let c = params.c;
    let sign = |t: usize| if t < n { T::one() } else { -T::one() };
    let p: Vec<T> = (0..m)
        .map(|t| params.epsilon - sign(t) * targets[t % n])
        .collect();
    // Q x = G (G^T x) with G_t = sign_t x_{t mod n}.
    let gt = |x: &[T]| -> Vec<T> {
        let mut v = vec![T::zero(); dim];
        for (t, &xt) in x.iter().enumerate() {
            let w = sign(t) * xt;
            for (vk, &r) in v.iter_mut().zip(&rows[t % n]) {
                *vk = *vk + w * r;
            }
        }
        v
    };
    let g = |v: &[T]| -> Vec<T> { (0..m).map(|t| sign(t) * dot(&rows[t % n], v)).collect() };
    let scale = p.iter().fold(T::one(), |a, b| a.max(b.abs()));
    let half = T::lit(0.5);

    // Good enough to hand over to SMO if the Newton steps break down.
    let close = |mu: T| mu <= T::lit(1e-9) * scale * c;
    let mut x = vec![c * half; m];
    let mut zl = vec![scale; m];
    let mut zu = vec![scale; m];
    let mut y = T::zero();
    let mut last_mu = T::infinity();
    let budget = IPM_MAX_ITERATIONS.min(params.max_iterations);
    for it in 0..budget {
        let qx = g(&gt(&x));
        let rd: Vec<T> = (0..m)
            .map(|t| qx[t] + p[t] - sign(t) * y - zl[t] + zu[t])
            .collect();
        let rp: T = (0..m).map(|t| sign(t) * x[t]).sum();
        let mu = (0..m).map(|t| x[t] * zl[t] + (c - x[t]) * zu[t]).sum::<T>()
            / T::from_usize_lossy(2 * m);
        let rd_max = rd.iter().fold(T::zero(), |a, b| a.max(b.abs()));
        if rd_max <= T::lit(1e-9) * scale
            && rp.abs() <= T::lit(1e-9) * c
            && mu <= T::lit(1e-12) * scale * c
        {
            return (Some(snap(&x, &zl, &zu, n, c, scale)), it);
        }

        let d: Vec<T> = (0..m).map(|t| zl[t] / x[t] + zu[t] / (c - x[t])).collect();
        // S = I + G^T D^-1 G
        let mut s = vec![vec![T::zero(); dim]; dim];
        // Multipliers i and i + n share the row x_i.
        for i in 0..n {
            let r = &rows[i];
            let w = T::one() / d[i] + T::one() / d[i + n];
            for i in 0..dim {
                let ri = w * r[i];
                for j in 0..=i {
                    s[i][j] = s[i][j] + ri * r[j];
                }
            }
        }
        for i in 0..dim {
            s[i][i] = s[i][i] + T::one();
            for j in 0..i {
                s[j][i] = s[i][j];
            }
        }
        // Near convergence 1/D spans many decades and the factorization can
        // lose definiteness in floating point; a relative jitter restores it.
        let peak = (0..dim).fold(T::one(), |a, i| a.max(s[i][i]));
        let mut factored = None;
        for shift in [0.0, 1e-14, 1e-12, 1e-10] {
            let mut trial = s.clone();
            for (i, row) in trial.iter_mut().enumerate() {
                row[i] = row[i] + T::lit(shift) * peak;
            }
            if cholesky(&mut trial) {
                factored = Some(trial);
                break;
            }
        }
        let Some(s) = factored else {
            return (close(mu).then(|| snap(&x, &zl, &zu, n, c, scale)), it);
        };
        // (D + G G^T)^-1 v
        let woodbury = |v: &[T]| -> Vec<T> {
            let dv: Vec<T> = v.iter().zip(&d).map(|(&a, &b)| a / b).collect();
            let mut k = gt(&dv);
            cholesky_solve(&s, &mut k);
            let gk = g(&k);
            dv.iter()
                .zip(gk.iter().zip(&d))
                .map(|(&a, (&b, &dd))| a - b / dd)
                .collect()
        };
        // The Woodbury form loses digits as D spreads; refinement recovers them.
        let m_inv = |v: &[T]| -> Vec<T> {
            let mut sol = woodbury(v);
            for _ in 0..REFINE_STEPS {
                let gs = g(&gt(&sol));
                let r: Vec<T> = (0..m).map(|t| v[t] - d[t] * sol[t] - gs[t]).collect();
                let fix = woodbury(&r);
                for (a, b) in sol.iter_mut().zip(fix) {
                    *a = *a + b;
                }
            }
            sol
        };
        let w = m_inv(&(0..m).map(sign).collect::<Vec<T>>());
        let aw: T = (0..m).map(|t| sign(t) * w[t]).sum();
        let direction = |tl: &[T], tu: &[T]| {
            let r1: Vec<T> = (0..m)
                .map(|t| -rd[t] + tl[t] / x[t] - tu[t] / (c - x[t]))
                .collect();
            let u = m_inv(&r1);
            let au: T = (0..m).map(|t| sign(t) * u[t]).sum();
            let dy = (-rp - au) / aw;
            let dx: Vec<T> = (0..m).map(|t| u[t] + w[t] * dy).collect();
            let dzl: Vec<T> = (0..m).map(|t| (tl[t] - zl[t] * dx[t]) / x[t]).collect();
            let dzu: Vec<T> = (0..m)
                .map(|t| (tu[t] + zu[t] * dx[t]) / (c - x[t]))
                .collect();
            (dx, dy, dzl, dzu)
        };
        let max_step = |dx: &[T], dzl: &[T], dzu: &[T]| {
            let mut a = T::one();
            for t in 0..m {
                if dx[t] < T::zero() {
                    a = a.min(-x[t] / dx[t]);
                } else if dx[t] > T::zero() {
                    a = a.min((c - x[t]) / dx[t]);
                }
                if dzl[t] < T::zero() {
                    a = a.min(-zl[t] / dzl[t]);
                }
                if dzu[t] < T::zero() {
                    a = a.min(-zu[t] / dzu[t]);
                }
            }
            a
        };

        let tl: Vec<T> = (0..m).map(|t| -x[t] * zl[t]).collect();
        let tu: Vec<T> = (0..m).map(|t| -(c - x[t]) * zu[t]).collect();
        let (dxa, _, dzla, dzua) = direction(&tl, &tu);
        let a_aff = max_step(&dxa, &dzla, &dzua);
        let mu_aff = (0..m)
            .map(|t| {
                let xn = x[t] + a_aff * dxa[t];
                xn * (zl[t] + a_aff * dzla[t]) + (c - xn) * (zu[t] + a_aff * dzua[t])
            })
            .sum::<T>()
            / T::from_usize_lossy(2 * m);
        let sigma = {
            let r = mu_aff / mu;
            r * r * r
        };
        let tl: Vec<T> = (0..m)
            .map(|t| sigma * mu - x[t] * zl[t] - dxa[t] * dzla[t])
            .collect();
        let tu: Vec<T> = (0..m)
            .map(|t| sigma * mu - (c - x[t]) * zu[t] + dxa[t] * dzua[t])
            .collect();
        let (dx, dy, dzl, dzu) = direction(&tl, &tu);
        let step = T::lit(0.995) * max_step(&dx, &dzl, &dzu);
        if !(step > T::zero()) || dx.iter().chain(&dzl).chain(&dzu).any(|v| !v.is_finite()) {
            return (close(mu).then(|| snap(&x, &zl, &zu, n, c, scale)), it);
        }
        let keep = T::one() - T::lit(0.995);
        for t in 0..m {
            // Rounding can land exactly on a bound; keep the interior margin.
            let xn = x[t] + step * dx[t];
            x[t] = if xn <= T::zero() {
                x[t] * keep
            } else if xn >= c {
                c - (c - x[t]) * keep
            } else {
                xn
            };
            zl[t] = (zl[t] + step * dzl[t]).max(zl[t] * keep);
            zu[t] = (zu[t] + step * dzu[t]).max(zu[t] * keep);
        }
        y = y + step * dy;
        last_mu = mu;
    }
    (
        close(last_mu).then(|| snap(&x, &zl, &zu, n, c, scale)),
        budget,
    )
}

/// Sends each multiplier to the bound whose dual outweighs its distance
/// from it, collapses `(alpha, alpha*)` to their difference and spreads the
/// resulting balance error over the free multipliers.
fn snap<T: Scalar>(x: &[T], zl: &[T], zu: &[T], n: usize, c: T, scale: T) -> Vec<T> {
    let settled: Vec<T> = (0..2 * n)
        .map(|t| {
            if x[t] / c < zl[t] / scale {
                T::zero()
            } else if (c - x[t]) / c < zu[t] / scale {
                c
            } else {
                x[t]
            }
        })
        .collect();
    let mut beta: Vec<T> = (0..n).map(|i| settled[i] - settled[i + n]).collect();
    let free: Vec<usize> = (0..n)
        .filter(|&i| beta[i] != T::zero() && beta[i].abs() != c)
        .collect();
    let imbalance: T = beta.iter().copied().sum();
    if !free.is_empty() {
        let share = imbalance / T::from_usize_lossy(free.len());
        for &i in &free {
            let b = beta[i] - share;
            // Never let the correction flip a sign or cross the box.
            beta[i] = if beta[i] > T::zero() {
                b.max(T::zero()).min(c)
            } else {
                b.min(T::zero()).max(-c)
            };
        }
    }
    let mut alpha = vec![T::zero(); 2 * n];
    for (i, &b) in beta.iter().enumerate() {
        if b > T::zero() {
            alpha[i] = b;
        } else {
            alpha[i + n] = -b;
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64 - 0.5]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        (rows, y)
    }

    #[test]
    fn fits_line_inside_tube() {
        let (rows, y) = line(40);
        let params = SvrParams {
            c: 10.0,
            epsilon: 0.01,
            ..Default::default()
        };
        let m = LinearSvr::fit(&rows, &y, &params).unwrap();
        for (r, &t) in rows.iter().zip(&y) {
            assert!((m.predict(r) - t).abs() <= 0.01 + 1e-6);
        }
        assert!(m.kkt_residual < 1e-4);
    }

    #[test]
    fn multipliers_in_box_and_balanced() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64;
                vec![(0.37 * t).sin(), (0.11 * t).cos()]
            })
            .collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let params = SvrParams::default();
        let m = LinearSvr::fit(&rows, &y, &params).unwrap();
        let sum: f64 = m.alpha.iter().zip(&m.alpha_star).map(|(a, s)| a - s).sum();
        assert!(sum.abs() < 1e-9);
        for (&a, &s) in m.alpha.iter().zip(&m.alpha_star) {
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&s));
            assert!(a * s < 1e-12, "both multipliers active");
        }
        assert!(m.kkt_residual < 1e-4, "kkt {}", m.kkt_residual);
    }

    #[test]
    fn wide_tube_gives_flat_model() {
        let (rows, y) = line(20);
        let params = SvrParams {
            epsilon: 10.0,
            ..Default::default()
        };
        let m = LinearSvr::fit(&rows, &y, &params).unwrap();
        assert_eq!(m.weights, vec![0.0]);
        assert!(m.alpha.iter().chain(&m.alpha_star).all(|&a| a == 0.0));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let (rows, y) = line(30);
        let params = SvrParams {
            epsilon: 0.0,
            max_iterations: 1,
            ..Default::default()
        };
        match LinearSvr::fit(&rows, &y, &params) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn f32_solution_close_to_f64() {
        let (rows, y) = line(25);
        let r32: Vec<Vec<f32>> = rows.iter().map(|r| vec![r[0] as f32]).collect();
        let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let p = SvrParams::<f32> {
            c: 10.0,
            epsilon: 0.01,
            ..Default::default()
        };
        let m = LinearSvr::fit(&r32, &y32, &p).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 0.05);
    }
}
