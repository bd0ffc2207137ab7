//! The classifier roster, a uniform fit/predict contract and the parameter
//! registry.
//!
//! | id              | family                              |
//! |-----------------|-------------------------------------|
//! | `knn`           | k-nearest neighbours                |
//! | `naive_bayes`   | Naive Bayes (Gaussian/kernel/bins)  |
//! | `logistic`      | ridge multinomial logistic          |
//! | `c45`           | C4.5 decision tree                  |
//! | `cart`          | CART with cost-complexity pruning   |
//! | `random_forest` | bagged random trees                 |
//! | `svm`           | one-vs-one SMO support vector machine |
//! | `mlp`           | multilayer perceptron               |

pub mod cart;
pub mod c45;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;
mod params;
pub mod svm;
pub(crate) mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use params::{
    ActiveWhen, ClassifierConfig, ParamKind, ParamSchema, ParamSpec, ParamValue, RandomRange,
    SweepTarget,
};

use crate::data::Samples;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierId {
    Knn,
    NaiveBayes,
    Logistic,
    C45,
    Cart,
    RandomForest,
    Svm,
    Mlp,
}

impl ClassifierId {
    pub const ALL: [ClassifierId; 8] = [
        ClassifierId::NaiveBayes,
        ClassifierId::Logistic,
        ClassifierId::Mlp,
        ClassifierId::C45,
        ClassifierId::Cart,
        ClassifierId::RandomForest,
        ClassifierId::Knn,
        ClassifierId::Svm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ClassifierId::Knn => "knn",
            ClassifierId::NaiveBayes => "naive_bayes",
            ClassifierId::Logistic => "logistic",
            ClassifierId::C45 => "c45",
            ClassifierId::Cart => "cart",
            ClassifierId::RandomForest => "random_forest",
            ClassifierId::Svm => "svm",
            ClassifierId::Mlp => "mlp",
        }
    }

    /// Name used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierId::Knn => "kNN",
            ClassifierId::NaiveBayes => "Naive Bayes",
            ClassifierId::Logistic => "Logistic",
            ClassifierId::C45 => "C4.5",
            ClassifierId::Cart => "Simple Cart",
            ClassifierId::RandomForest => "Random Forest",
            ClassifierId::Svm => "SVM",
            ClassifierId::Mlp => "Perceptron",
        }
    }

    /// Parameter schema; a few grids and ranges depend on the feature count.
    pub fn schema(self, n_features: usize) -> ParamSchema {
        let params = match self {
            ClassifierId::Knn => knn::schema(),
            ClassifierId::NaiveBayes => naive_bayes::schema(),
            ClassifierId::Logistic => logistic::schema(),
            ClassifierId::C45 => c45::schema(),
            ClassifierId::Cart => cart::schema(),
            ClassifierId::RandomForest => forest::schema(n_features),
            ClassifierId::Svm => svm::schema(),
            ClassifierId::Mlp => mlp::schema(),
        };
        ParamSchema {
            classifier: self,
            params,
        }
    }
}

impl fmt::Display for ClassifierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ClassifierId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let id = match lower.as_str() {
            "knn" | "ibk" => ClassifierId::Knn,
            "naive_bayes" | "naivebayes" | "nb" => ClassifierId::NaiveBayes,
            "logistic" => ClassifierId::Logistic,
            "c45" | "c4.5" | "j48" => ClassifierId::C45,
            "cart" | "simplecart" | "simple_cart" => ClassifierId::Cart,
            "random_forest" | "randomforest" | "rf" => ClassifierId::RandomForest,
            "svm" | "smo" => ClassifierId::Svm,
            "mlp" | "perceptron" | "multilayer_perceptron" => ClassifierId::Mlp,
            _ => return Err(Error::UnknownClassifier(s.to_string())),
        };
        Ok(id)
    }
}

/// Every classifier's schema, as exported to `schemas.json`.
pub fn schema_registry(n_features: usize) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for id in ClassifierId::ALL {
        let schema = id.schema(n_features);
        map.insert(
            id.id().to_string(),
            serde_json::to_value(&schema.params).expect("schemas serialize"),
        );
    }
    serde_json::Value::Object(map)
}

pub trait Predict {
    fn predict(&self, x: &[f64]) -> Result<usize>;

    fn predict_all(&self, samples: &Samples) -> Result<Vec<usize>> {
        samples.rows().map(|x| self.predict(x)).collect()
    }
}

/// Anything that can be trained on samples; implemented by
/// [`ClassifierConfig`] and by test doubles.
pub trait Learner: Sync {
    type Model: Predict;

    fn fit(&self, train: &Samples) -> Result<Self::Model>;
}

#[derive(Clone, Debug)]
enum ModelKind {
    Constant(usize),
    Knn(knn::KnnModel),
    NaiveBayes(naive_bayes::NaiveBayesModel),
    Logistic(logistic::LogisticModel),
    C45(c45::C45Model),
    Cart(cart::CartModel),
    Forest(forest::ForestModel),
    Svm(svm::SvmModel),
    Mlp(mlp::MlpModel),
}

/// Fitted model of any classifier in the roster.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    n_features: usize,
    n_classes: usize,
    kind: ModelKind,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn as_knn(&self) -> Option<&knn::KnnModel> {
        match &self.kind {
            ModelKind::Knn(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_naive_bayes(&self) -> Option<&naive_bayes::NaiveBayesModel> {
        match &self.kind {
            ModelKind::NaiveBayes(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_logistic(&self) -> Option<&logistic::LogisticModel> {
        match &self.kind {
            ModelKind::Logistic(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_forest(&self) -> Option<&forest::ForestModel> {
        match &self.kind {
            ModelKind::Forest(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_svm(&self) -> Option<&svm::SvmModel> {
        match &self.kind {
            ModelKind::Svm(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_mlp(&self) -> Option<&mlp::MlpModel> {
        match &self.kind {
            ModelKind::Mlp(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_c45(&self) -> Option<&c45::C45Model> {
        match &self.kind {
            ModelKind::C45(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_cart(&self) -> Option<&cart::CartModel> {
        match &self.kind {
            ModelKind::Cart(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ModelKind::Constant(_))
    }
}

impl Predict for TrainedModel {
    fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(match &self.kind {
            ModelKind::Constant(c) => *c,
            ModelKind::Knn(m) => m.predict(x),
            ModelKind::NaiveBayes(m) => m.predict(x),
            ModelKind::Logistic(m) => m.predict(x),
            ModelKind::C45(m) => m.predict(x),
            ModelKind::Cart(m) => m.predict(x),
            ModelKind::Forest(m) => m.predict(x),
            ModelKind::Svm(m) => m.predict(x),
            ModelKind::Mlp(m) => m.predict(x),
        })
    }
}

/// Trains `config` on `train`.
///
/// A training set containing a single class yields a model that predicts
/// that class everywhere, whatever the classifier.
pub fn fit(config: &ClassifierConfig, train: &Samples) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let schema = config.classifier.schema(train.n_features());
    let config = config.validated(&schema)?;
    let counts = train.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    let kind = if present.len() == 1 {
        ModelKind::Constant(present[0])
    } else {
        match config.classifier {
            ClassifierId::Knn => ModelKind::Knn(knn::fit(&config, train)?),
            ClassifierId::NaiveBayes => ModelKind::NaiveBayes(naive_bayes::fit(&config, train)?),
            ClassifierId::Logistic => ModelKind::Logistic(logistic::fit(&config, train)?),
            ClassifierId::C45 => ModelKind::C45(c45::fit(&config, train)?),
            ClassifierId::Cart => ModelKind::Cart(cart::fit(&config, train)?),
            ClassifierId::RandomForest => ModelKind::Forest(forest::fit(&config, train)?),
            ClassifierId::Svm => ModelKind::Svm(svm::fit(&config, train)?),
            ClassifierId::Mlp => ModelKind::Mlp(mlp::fit(&config, train)?),
        }
    };
    Ok(TrainedModel {
        n_features: train.n_features(),
        n_classes: train.n_classes(),
        kind,
    })
}

impl Learner for ClassifierConfig {
    type Model = TrainedModel;

    fn fit(&self, train: &Samples) -> Result<TrainedModel> {
        fit(self, train)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Per-feature affine rescaling fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct FeatureScaler {
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl FeatureScaler {
    pub fn identity(n_features: usize) -> Self {
        FeatureScaler {
            offset: vec![0.0; n_features],
            scale: vec![1.0; n_features],
        }
    }

    /// Maps each feature's training range onto `[lo, hi]`; constant features
    /// map to `lo`.
    pub fn min_max(samples: &Samples, lo: f64, hi: f64) -> Self {
        let f = samples.n_features();
        let mut min = vec![f64::INFINITY; f];
        let mut max = vec![f64::NEG_INFINITY; f];
        for row in samples.rows() {
            for j in 0..f {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        let mut offset = vec![0.0; f];
        let mut scale = vec![0.0; f];
        for j in 0..f {
            let span = max[j] - min[j];
            if span > 0.0 {
                scale[j] = (hi - lo) / span;
                offset[j] = lo - min[j] * scale[j];
            } else {
                offset[j] = lo;
            }
        }
        FeatureScaler { offset, scale }
    }

    /// Zero mean, unit (population) variance; constant features map to 0.
    pub fn standardize(samples: &Samples) -> Self {
        let f = samples.n_features();
        let n = samples.len().max(1) as f64;
        let mut mean = vec![0.0; f];
        for row in samples.rows() {
            for j in 0..f {
                mean[j] += row[j] / n;
            }
        }
        let mut var = vec![0.0; f];
        for row in samples.rows() {
            for j in 0..f {
                var[j] += (row[j] - mean[j]).powi(2) / n;
            }
        }
        let mut offset = vec![0.0; f];
        let mut scale = vec![0.0; f];
        for j in 0..f {
            if var[j] > 0.0 {
                scale[j] = 1.0 / var[j].sqrt();
                offset[j] = -mean[j] * scale[j];
            }
        }
        FeatureScaler { offset, scale }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..x.len() {
            out[j] = self.offset[j] + self.scale[j] * x[j];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn transform(&self, samples: &Samples) -> Samples {
        samples.map_rows(|x, out| self.apply_into(x, out))
    }
}
