//! Sequential minimal optimization for the soft-margin dual
//!
//!   min_α  ½ αᵀQα − eᵀα   s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K_ij,
//!
//! with second-order working-set selection: i maximizes the violation −y_t G_t
//! over the "up" set, and j is the "low" index whose pairing with i yields the
//! largest guaranteed decrease of the objective. The solver stops once the
//! maximal violating pair gap drops below `tol`, which bounds every KKT
//! residual |y_t f(x_t) − 1| of a free vector by `tol`.

use potlab_game::Scalar;

use super::kernel::Gram;
use crate::error::SvmError;

/// Curvature floor for pairs with non-positive K_ii + K_jj − 2K_ij.
const TAU: f64 = 1e-12;

pub(crate) struct Problem<'a, F> {
    pub gram: &'a Gram<F>,
    /// Positions in `gram` of the training points.
    pub idx: &'a [usize],
    pub y: &'a [F],
    pub c: F,
    pub tol: F,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution<F> {
    pub alpha: Vec<F>,
    pub grad: Vec<F>,
    pub bias: F,
    pub iterations: usize,
    pub dual: F,
}

impl<F: Scalar> Problem<'_, F> {
    #[inline]
    fn k(&self, s: usize, t: usize) -> F {
        self.gram.get(self.idx[s], self.idx[t])
    }

    fn in_up(&self, alpha: &[F], t: usize) -> bool {
        if self.y[t] > F::zero() {
            alpha[t] < self.c
        } else {
            alpha[t] > F::zero()
        }
    }

    fn in_low(&self, alpha: &[F], t: usize) -> bool {
        if self.y[t] > F::zero() {
            alpha[t] > F::zero()
        } else {
            alpha[t] < self.c
        }
    }

    /// Cold start: α = 0, G = −e.
    pub fn solve(&self) -> Result<Solution<F>, SvmError> {
        let n = self.idx.len();
        self.solve_from(vec![F::zero(); n], vec![-F::one(); n])
    }

    /// ½ Σ α_t (1 − G_t).
    fn dual(alpha: &[F], grad: &[F]) -> F {
        let half = F::lit(0.5);
        alpha.iter().zip(grad).fold(F::zero(), |acc, (a, g)| acc + *a * (F::one() - *g)) * half
    }

    pub fn solve_from(&self, mut alpha: Vec<F>, grad: Vec<F>) -> Result<Solution<F>, SvmError> {
        let n = self.idx.len();
        let c = self.c;
        let tau = F::lit(TAU);
        let two = F::lit(2.0);
        let half = F::lit(0.5);
        let slack = F::lit(1e-9).max(F::epsilon() * F::lit(100.0));
        let diag: Vec<F> = (0..n).map(|t| self.k(t, t)).collect();
        let mut row_i = vec![F::zero(); n];
        let mut row_j = vec![F::zero(); n];
        let mut dual = Self::dual(&alpha, &grad);
        // h_t = y_t G_t, so the update below needs no labels
        let mut h: Vec<F> = grad.iter().zip(self.y).map(|(g, y)| *g * *y).collect();
        let mut up: Vec<bool> = (0..n).map(|t| self.in_up(&alpha, t)).collect();
        let mut low: Vec<bool> = (0..n).map(|t| self.in_low(&alpha, t)).collect();
        let select_i = |h: &[F], up: &[bool]| {
            let mut gmax = F::neg_infinity();
            let mut i = usize::MAX;
            for t in 0..n {
                if up[t] && -h[t] > gmax {
                    gmax = -h[t];
                    i = t;
                }
            }
            (gmax, i)
        };
        let (mut gmax, mut i) = select_i(&h, &up);
        let mut iterations = 0;
        loop {
            if i != usize::MAX {
                self.gram.fill_row(self.idx, i, &mut row_i);
            }
            // j: largest second-order decrease among low-set violators of i
            let mut gmax2 = F::neg_infinity();
            let mut j = usize::MAX;
            // best decrease diff²/quad kept as a fraction to avoid dividing
            let (mut best_num, mut best_den) = (F::zero(), F::one());
            for t in 0..n {
                if !low[t] {
                    continue;
                }
                let v = h[t];
                if v > gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if i != usize::MAX && diff > F::zero() {
                    let mut quad = diag[i] + diag[t] - two * row_i[t];
                    if quad <= F::zero() {
                        quad = tau;
                    }
                    let num = diff * diff;
                    if j == usize::MAX || num * best_den > best_num * quad {
                        best_num = num;
                        best_den = quad;
                        j = t;
                    }
                }
            }
            let gap = gmax + gmax2;
            if !gap.is_finite() && i != usize::MAX && gmax2 != F::neg_infinity() {
                return Err(SvmError::NonFinite);
            }
            if i == usize::MAX || j == usize::MAX || gap < self.tol {
                let grad: Vec<F> = h.iter().zip(self.y).map(|(v, y)| *v * *y).collect();
                let bias = self.bias(&alpha, &grad);
                let dual = Self::dual(&alpha, &grad);
                return Ok(Solution { alpha, grad, bias, iterations, dual });
            }
            if iterations >= self.max_iter {
                return Err(SvmError::NotConverged { iterations, gap: gap.as_f64() });
            }
            iterations += 1;

            let (yi, yj) = (self.y[i], self.y[j]);
            let (gi, gj) = (yi * h[i], yj * h[j]);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kij = row_i[j];
            let mut quad = diag[i] + diag[j] - two * kij;
            if quad <= F::zero() {
                quad = tau;
            }
            let (mut ai, mut aj) = (old_i, old_j);
            if yi != yj {
                let delta = (-gi - gj) / quad;
                let diff = ai - aj;
                ai = ai + delta;
                aj = aj + delta;
                if diff > F::zero() {
                    if aj < F::zero() {
                        aj = F::zero();
                        ai = diff;
                    }
                } else if ai < F::zero() {
                    ai = F::zero();
                    aj = -diff;
                }
                if diff > F::zero() {
                    if ai > c {
                        ai = c;
                        aj = c - diff;
                    }
                } else if aj > c {
                    aj = c;
                    ai = c + diff;
                }
            } else {
                let delta = (gi - gj) / quad;
                let sum = ai + aj;
                ai = ai - delta;
                aj = aj + delta;
                if sum > c {
                    if ai > c {
                        ai = c;
                        aj = sum - c;
                    }
                } else if aj < F::zero() {
                    aj = F::zero();
                    ai = sum;
                }
                if sum > c {
                    if aj > c {
                        aj = c;
                        ai = sum - c;
                    }
                } else if ai < F::zero() {
                    ai = F::zero();
                    aj = sum;
                }
            }
            alpha[i] = ai;
            alpha[j] = aj;
            up[i] = self.in_up(&alpha, i);
            low[i] = self.in_low(&alpha, i);
            up[j] = self.in_up(&alpha, j);
            low[j] = self.in_low(&alpha, j);
            let (di, dj) = (ai - old_i, aj - old_j);

            // exact change of the dual for this pair step, from the old gradient
            let qij = yi * yj * kij;
            let step = -(gi * di + gj * dj) - half * (diag[i] * di * di + diag[j] * dj * dj + two * qij * di * dj);
            if !step.is_finite() {
                return Err(SvmError::NonFinite);
            }
            let next = dual + step;
            if step < -slack * F::one().max(next.abs()) {
                return Err(SvmError::DualDecrease { iteration: iterations, drop: (-step).as_f64() });
            }
            dual = next;

            self.gram.fill_row(self.idx, j, &mut row_j);
            let (si, sj) = (yi * di, yj * dj);
            gmax = F::neg_infinity();
            i = usize::MAX;
            for t in 0..n {
                let v = h[t] + row_i[t] * si + row_j[t] * sj;
                h[t] = v;
                if up[t] && -v > gmax {
                    gmax = -v;
                    i = t;
                }
            }
        }
    }

    /// b in f(x) = Σ α_t y_t K(x_t, x) + b: the mean of −y_t G_t over free
    /// vectors, or the middle of the feasible interval if none is free.
    fn bias(&self, alpha: &[F], grad: &[F]) -> F {
        let mut sum = F::zero();
        let mut free = 0usize;
        let mut ub = F::infinity();
        let mut lb = F::neg_infinity();
        for t in 0..alpha.len() {
            let yg = self.y[t] * grad[t];
            let at_upper = alpha[t] >= self.c;
            let at_lower = alpha[t] <= F::zero();
            if at_upper {
                if self.y[t] < F::zero() {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > F::zero() {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum = sum + yg;
            }
        }
        let rho = if free > 0 {
            sum / F::from_count(free)
        } else if ub.is_finite() && lb.is_finite() {
            (ub + lb) * F::lit(0.5)
        } else if ub.is_finite() {
            ub
        } else {
            lb
        };
        -rho
    }
}
