use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labelled instances with real-valued features, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    n_features: usize,
    n_classes: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl Samples {
    pub fn new(n_features: usize, n_classes: usize, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() * n_features {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len() * n_features,
            });
        }
        if let Some(&bad) = y.iter().find(|&&label| label >= n_classes) {
            return Err(Error::Mismatch(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        Ok(Samples {
            n_features,
            n_classes,
            x,
            y,
        })
    }

    /// Builds from rows; the class count is one past the largest label.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: &[usize]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let n_features = rows.first().map_or(0, |r| r.as_ref().len());
        let mut x = Vec::with_capacity(rows.len() * n_features);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: r.len(),
                });
            }
            x.extend_from_slice(r);
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Samples::new(n_features, n_classes, x, labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &label in &self.y {
            counts[label] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. Keeps the class count.
    pub fn subset(&self, indices: &[usize]) -> Samples {
        let mut x = Vec::with_capacity(indices.len() * self.n_features);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Samples {
            n_features: self.n_features,
            n_classes: self.n_classes,
            x,
            y,
        }
    }

    /// Same rows with features transformed by `f`.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Samples {
        let mut x = vec![0.0; self.x.len()];
        for i in 0..self.len() {
            let range = i * self.n_features..(i + 1) * self.n_features;
            f(self.row(i), &mut x[range]);
        }
        Samples {
            n_features: self.n_features,
            n_classes: self.n_classes,
            x,
            y: self.y.clone(),
        }
    }
}

/// Deals the indices of each class round-robin over `k` folds after a
/// per-class shuffle; the dealing position carries across classes so fold
/// sizes differ by at most one. Never fails, even for classes smaller
/// than `k`.
pub fn stratify(labels: &[usize], n_classes: usize, k: usize, rng: &mut crate::numeric::Rng) -> Vec<Vec<usize>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for members in by_class.iter_mut() {
        rng.shuffle(members);
        for &i in members.iter() {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    folds
}
