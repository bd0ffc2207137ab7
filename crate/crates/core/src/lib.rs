//! Synthetic Gaussian dataset families, eight from-scratch classifiers and
//! the protocols used to compare them: default-parameter benchmarks,
//! one-dimensional parameter sweeps and random parameter search.

pub mod classifiers;
pub mod data;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod numeric;
pub mod par;
pub mod report;

pub use classifiers::{fit, ClassifierConfig, ClassifierId, Learner, Predict, TrainedModel};
pub use data::Samples;
pub use error::{Error, Result};
pub use evaluation::{cross_val_accuracy, CvSettings, EvalStats};
