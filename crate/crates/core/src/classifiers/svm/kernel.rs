use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `(x·y)^E`
    Poly { exponent: i32 },
    /// `(x·y)^E / sqrt((x·x)^E (y·y)^E)`
    NormPoly { exponent: i32 },
    /// `exp(-γ |x - y|²)`
    Rbf { gamma: f64 },
    /// Pearson VII universal kernel.
    Puk { sigma: f64, omega: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Kernel {
    /// Evaluates without a length check; see [`kernel_eval`].
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Poly { exponent } => dot(x, y).powi(exponent),
            Kernel::NormPoly { exponent } => {
                let num = dot(x, y).powi(exponent);
                let den = (dot(x, x).powi(exponent) * dot(y, y).powi(exponent)).sqrt();
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            }
            Kernel::Rbf { gamma } => (-gamma * sq_dist(x, y)).exp(),
            Kernel::Puk { sigma, omega } => {
                let d = sq_dist(x, y).sqrt();
                let t = 2.0 * d * (2f64.powf(1.0 / omega) - 1.0).sqrt() / sigma;
                1.0 / (1.0 + t * t).powf(omega)
            }
        }
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(kernel.eval(x, y))
}
