//! Ridge-penalized multinomial logistic regression fitted by L-BFGS.
//!
//! Features are standardized on the training set; the last class is the
//! reference (its score is fixed at 0). Intercepts are not penalized.

use std::collections::VecDeque;

use super::{argmax, softmax_in_place, ClassifierConfig, FeatureScaler, ParamSpec, RandomRange};
use crate::data::Samples;
use crate::error::{Error, Result};

pub const GRADIENT_TOL: f64 = 1e-6;
const HISTORY: usize = 10;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::real("R", 1e-8, "ridge penalty")
            .grid_reals((-10..=1).filter(|&e| e != -8).map(|e| 10f64.powi(e)))
            .range(RandomRange::RealLog { lo: 1e-10, hi: 10.0 })
            .bounds(0.0, f64::INFINITY),
        ParamSpec::int("M", 200, "maximum optimizer iterations")
            .grid_ints([10, 25, 50, 100, 500])
            .range(RandomRange::IntLog { lo: 10, hi: 500 })
            .bounds(1.0, f64::INFINITY),
    ]
}

/// Penalized negative log-likelihood over standardized samples.
pub struct Objective<'a> {
    data: &'a Samples,
    ridge: f64,
}

impl<'a> Objective<'a> {
    pub fn new(data: &'a Samples, ridge: f64) -> Self {
        Objective { data, ridge }
    }

    pub fn n_params(&self) -> usize {
        (self.data.n_classes() - 1) * (self.data.n_features() + 1)
    }

    pub fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let f = self.data.n_features();
        let stride = f + 1;
        let c = self.data.n_classes();
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        let mut p = vec![0.0; c];
        for i in 0..self.data.len() {
            let x = self.data.row(i);
            scores_into(w, x, &mut p);
            // log-softmax of the true class
            let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + p.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            let y = self.data.label(i);
            loss -= p[y] - lse;
            for pk in p.iter_mut() {
                *pk = (*pk - lse).exp();
            }
            for k in 0..c - 1 {
                let r = p[k] - if y == k { 1.0 } else { 0.0 };
                let g = &mut grad[k * stride..(k + 1) * stride];
                for j in 0..f {
                    g[j] += r * x[j];
                }
                g[f] += r;
            }
        }
        for k in 0..c - 1 {
            for j in 0..f {
                let wkj = w[k * stride + j];
                loss += self.ridge * wkj * wkj;
                grad[k * stride + j] += 2.0 * self.ridge * wkj;
            }
        }
        (loss, grad)
    }
}

fn scores_into(w: &[f64], x: &[f64], out: &mut [f64]) {
    let f = x.len();
    let stride = f + 1;
    let c = out.len();
    for k in 0..c - 1 {
        let wk = &w[k * stride..(k + 1) * stride];
        out[k] = wk[f] + wk[..f].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
    out[c - 1] = 0.0;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes the objective; returns the weights and the iteration count.
fn lbfgs(obj: &Objective, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = obj.n_params();
    let mut w = vec![0.0; n];
    let (mut fx, mut g) = obj.value_and_gradient(&w);
    if !fx.is_finite() {
        return Err(Error::Divergence(format!("initial loss {fx}")));
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iter = 0;
    while iter < max_iter && inf_norm(&g) > GRADIENT_TOL {
        iter += 1;
        // two-loop recursion for d = -H g
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0 / inf_norm(&g).max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v / inf_norm(&g).max(1.0)).collect();
            slope = dot(&g, &d);
        }

        // backtracking Armijo line search
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi + step * di).collect();
            let (ft, gt) = obj.value_and_gradient(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, f_new, g_new)) = accepted else {
            if !fx.is_finite() {
                return Err(Error::Divergence(format!("loss {fx}")));
            }
            // no further decrease representable; treat as converged
            break;
        };
        let s: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        w = w_new;
        fx = f_new;
        g = g_new;
        if !fx.is_finite() {
            return Err(Error::Divergence(format!("loss {fx} at iteration {iter}")));
        }
    }
    Ok((w, iter))
}

#[derive(Clone, Debug)]
pub struct LogisticModel {
    scaler: FeatureScaler,
    n_classes: usize,
    weights: Vec<f64>,
    iterations: usize,
}

impl LogisticModel {
    /// Weights on standardized features, `(classes - 1) x (features + 1)`
    /// row-major with the intercept last in each row.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.apply(x);
        let mut s = vec![0.0; self.n_classes];
        scores_into(&self.weights, &z, &mut s);
        softmax_in_place(&mut s);
        s
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.probabilities(x))
    }
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<LogisticModel> {
    let ridge = cfg.real("R")?;
    if !(ridge >= 0.0) {
        return Err(cfg.range_error("R", format!("ridge must be >= 0, got {ridge}")));
    }
    let max_iter = cfg.int("M")?.max(1) as usize;
    let scaler = FeatureScaler::standardize(train);
    let z = scaler.transform(train);
    let obj = Objective::new(&z, ridge);
    let (weights, iterations) = lbfgs(&obj, max_iter)?;
    Ok(LogisticModel {
        scaler,
        n_classes: train.n_classes(),
        weights,
        iterations,
    })
}
