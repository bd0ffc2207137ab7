//! Accuracy under stratified cross-validation and the comparison protocols
//! built on it.

mod protocols;

pub use protocols::{
    best_of_random_ranking, default_benchmark, feature_curve, random_search, search_trials,
    sweep_parameter, BenchEntry, BestTrial, CurvePoint, CurveSeries, FamilyId, RankEntry, SearchReport,
    SweepReport,
};

use serde::{Deserialize, Serialize};

use crate::classifiers::{Learner, Predict};
use crate::data::{stratify, Samples};
use crate::error::{Error, Result};
use crate::numeric::Rng;

/// Cross-validation settings recorded alongside every result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings { folds: 10, seed: 1 }
    }
}

/// `k` disjoint stratified folds covering every index.
pub fn stratified_folds(samples: &Samples, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidSpec(format!("cross-validation needs at least 2 folds, got {k}")));
    }
    for (class, &count) in samples.class_counts().iter().enumerate() {
        if count > 0 && count < k {
            return Err(Error::Stratification { class, count, folds: k });
        }
    }
    let mut rng = Rng::new(seed);
    Ok(stratify(samples.labels(), samples.n_classes(), k, &mut rng))
}

/// Percentage of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("accuracy of an empty prediction list"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

/// Pooled accuracy: every instance is predicted once by the model trained
/// without its fold, and accuracy is taken over all predictions together.
pub fn cross_val_accuracy<L: Learner>(learner: &L, data: &Samples, cv: &CvSettings) -> Result<f64> {
    let folds = stratified_folds(data, cv.folds, cv.seed)?;
    let mut predicted = vec![usize::MAX; data.len()];
    let mut in_fold = vec![usize::MAX; data.len()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            in_fold[i] = f;
        }
    }
    for (f, fold) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| in_fold[i] != f).collect();
        let model = learner.fit(&data.subset(&train_idx))?;
        for &i in fold {
            predicted[i] = model.predict(data.row(i))?;
        }
    }
    accuracy(&predicted, data.labels())
}

/// Summary of accuracies over a dataset family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    /// Population standard deviation.
    pub deviation: f64,
    pub best: f64,
    pub worst: f64,
}

impl EvalStats {
    pub fn of(values: &[f64]) -> Result<EvalStats> {
        if values.is_empty() {
            return Err(Error::Empty("statistics of an empty list"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(EvalStats {
            mean,
            deviation: var.sqrt(),
            best: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            worst: values.iter().cloned().fold(f64::INFINITY, f64::min),
        })
    }
}
