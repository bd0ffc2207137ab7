use serde::{Deserialize, Serialize};

use super::DistributionSpec;
use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

/// Distribution of the i.i.d. Gaussian entries of a root matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSpec {
    /// Number of columns.
    pub m: usize,
    pub mu_g: f64,
    pub sigma_g2: f64,
}

/// Chooses the root-matrix shape and entry law so that `G Gᵀ` hits the
/// requested second moments.
///
/// With entries of mean `μ` and variance `σ²`, a product of `m` columns has
/// `E[diag] = m(σ² + μ²)`, `E[off] = mμ²` and `Var[off] = (mu_d² - mu_o²)/m`.
/// Solving gives `m = round((mu_d² - mu_o²)/s_o2)`; the column count is then
/// raised to `min_columns` and `μ`, `σ²` recomputed for the final `m` so the
/// two means stay exact.
pub fn moment_match(mu_d: f64, mu_o: f64, s_o2: f64, min_columns: usize) -> Result<RootSpec> {
    if !(mu_d > 0.0) {
        return Err(Error::Infeasible(format!(
            "diagonal mean must be positive, got {mu_d}"
        )));
    }
    if !(mu_o >= 0.0 && mu_o < mu_d) {
        return Err(Error::Infeasible(format!(
            "off-diagonal mean {mu_o} must lie in [0, {mu_d})"
        )));
    }
    if !(s_o2 > 0.0) {
        return Err(Error::Infeasible(format!(
            "off-diagonal variance must be positive, got {s_o2}"
        )));
    }
    let raw = ((mu_d * mu_d - mu_o * mu_o) / s_o2).round().max(1.0) as usize;
    let m = raw.max(min_columns).max(1);
    let mu_g = (mu_o / m as f64).sqrt();
    let sigma_g2 = mu_d / m as f64 - mu_g * mu_g;
    if !(sigma_g2 > 0.0) {
        return Err(Error::Infeasible(format!(
            "entry variance {sigma_g2} is not positive"
        )));
    }
    Ok(RootSpec { m, mu_g, sigma_g2 })
}

/// One class: its mean and a root matrix whose rows have been rescaled so
/// feature `i` has standard deviation `target_stds[i]` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub mean: Vec<f64>,
    pub target_stds: Vec<f64>,
    pub root_spec: RootSpec,
    pub root: Matrix,
}

impl ClassModel {
    pub fn covariance(&self) -> Matrix {
        crate::numeric::gram(&self.root)
    }
}

pub fn draw_class_model(
    n_features: usize,
    alpha: f64,
    f_sigma: &DistributionSpec,
    f_c: &DistributionSpec,
    min_columns: usize,
    rng: &mut Rng,
) -> Result<ClassModel> {
    let root_spec = moment_match(1.0, f_c.mean(), f_c.variance(), min_columns)?;
    let mean: Vec<f64> = (0..n_features).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let target_stds: Vec<f64> = (0..n_features)
        .map(|_| f_sigma.sample(rng).abs() / alpha)
        .collect();

    let m = root_spec.m;
    let sd = root_spec.sigma_g2.sqrt();
    let mut root = Matrix::zeros(n_features, m);
    for i in 0..n_features {
        let row = root.row_mut(i);
        for g in row.iter_mut() {
            *g = root_spec.mu_g + sd * rng.normal();
        }
        let norm = row.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            row[i % m] = 1.0;
        }
        let norm = if norm == 0.0 { 1.0 } else { norm };
        let factor = target_stds[i] / norm;
        for g in row.iter_mut() {
            *g *= factor;
        }
    }
    Ok(ClassModel {
        mean,
        target_stds,
        root_spec,
        root,
    })
}

/// `n` rows of `mean + G z` with `z ~ N(0, I_m)`.
pub fn sample_instances(model: &ClassModel, n: usize, rng: &mut Rng) -> Matrix {
    let f = model.mean.len();
    let m = model.root.cols();
    let mut out = Matrix::zeros(n, f);
    let mut z = vec![0.0; m];
    for r in 0..n {
        for v in z.iter_mut() {
            *v = rng.normal();
        }
        let row = out.row_mut(r);
        for i in 0..f {
            let g = model.root.row(i);
            row[i] = model.mean[i] + g.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}
