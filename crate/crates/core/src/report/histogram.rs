use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

/// Equal-width bins over `[min, max]`, the last bin closed on the right.
/// Constant input gets a unit-wide span centred on the value.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram input"));
    }
    if n_bins == 0 {
        return Err(Error::InvalidSpec("a histogram needs at least one bin".into()));
    }
    let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidSpec("histogram input must be finite".into()));
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; n_bins];
    for &v in values {
        let i = (((v - lo) / width).floor() as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        total: values.len(),
    })
}

impl Histogram {
    /// `bin_lo,bin_hi,count` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c).unwrap();
        }
        out
    }

    /// Mass of the bins lying entirely above `x`, plus a bin straddling it.
    pub fn mass_above(&self, x: f64) -> (usize, usize) {
        let mut strictly = 0;
        let mut straddle = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if self.edges[i] >= x {
                strictly += c;
            } else if self.edges[i + 1] > x {
                straddle += c;
            }
        }
        (strictly, straddle)
    }
}
