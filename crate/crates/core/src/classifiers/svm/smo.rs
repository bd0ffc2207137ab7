//! Binary soft-margin SVM dual solved by SMO with second-order working-set
//! selection.

use super::kernel::Kernel;
use crate::error::{Error, Result};

/// Kernel matrices up to this many rows are precomputed.
const FULL_MATRIX_LIMIT: usize = 3000;
const TAU: f64 = 1e-12;

pub(crate) struct Problem<'a> {
    pub x: &'a [&'a [f64]],
    /// +1 or -1.
    pub y: &'a [f64],
    pub c: f64,
    pub kernel: Kernel,
    pub tolerance: f64,
    /// Round-off margin for the box bounds.
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
}

struct Q<'a> {
    p: &'a Problem<'a>,
    full: Option<Vec<f64>>,
    diag: Vec<f64>,
}

impl<'a> Q<'a> {
    fn new(p: &'a Problem<'a>) -> Self {
        let n = p.x.len();
        let diag = (0..n).map(|i| p.kernel.eval(p.x[i], p.x[i])).collect();
        let full = (n <= FULL_MATRIX_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = p.y[i] * p.y[j] * p.kernel.eval(p.x[i], p.x[j]);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            m
        });
        Q { p, full, diag }
    }

    /// Row `i` of Q, borrowed from the full matrix or computed into `buf`.
    fn row<'b>(&'b self, i: usize, buf: &'b mut Vec<f64>) -> &'b [f64] {
        let n = self.p.x.len();
        match &self.full {
            Some(m) => &m[i * n..(i + 1) * n],
            None => {
                buf.clear();
                buf.extend((0..n).map(|j| self.p.y[i] * self.p.y[j] * self.p.kernel.eval(self.p.x[i], self.p.x[j])));
                buf
            }
        }
    }
}

pub(crate) fn solve(p: &Problem) -> Result<Solution> {
    let n = p.x.len();
    let (y, c, eps) = (p.y, p.c, p.epsilon);
    let q = Q::new(p);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(200_000);
    let (mut bi, mut bj) = (Vec::new(), Vec::new());
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c - eps } else { a > eps };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > eps } else { a < c - eps };
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        // i: maximal violating index from the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        gap = gmax - gmin;
        if i == usize::MAX || gap <= p.tolerance {
            break;
        }
        let qi = q.row(i, &mut bi);
        // j: second-order choice among "low" indices violating with i
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let a = q.diag[i] + q.diag[t] - 2.0 * y[i] * y[t] * qi[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -b * b / a;
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        let qj = q.row(j, &mut bj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q.diag[i] + q.diag[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q.diag[i] + q.diag[j] - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
        iterations += 1;
    }
    if iterations >= max_iter {
        return Err(Error::Convergence { worst_violation: gap });
    }
    Ok(Solution {
        rho: compute_rho(&alpha, &grad, y, c, eps),
        alpha,
        iterations,
    })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64, eps: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c - eps {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= eps {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    }
}
