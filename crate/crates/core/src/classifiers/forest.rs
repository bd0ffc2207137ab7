//! Random forest: unpruned random trees on bootstrap resamples, combined by
//! majority vote.

use super::tree::{Criterion, GrowParams, Tree};
use super::{argmax, ClassifierConfig, ParamSpec, RandomRange};
use crate::data::Samples;
use crate::error::Result;
use crate::numeric::Rng;
use crate::par;

pub(crate) fn schema(n_features: usize) -> Vec<ParamSpec> {
    let f = n_features.max(1) as i64;
    vec![
        ParamSpec::int("I", 10, "number of trees")
            .grid_ints([1, 25, 50, 100])
            .range(RandomRange::IntLog { lo: 1, hi: 100 })
            .bounds(1.0, f64::INFINITY),
        ParamSpec::int("K", 0, "candidate features per split (0: floor(log2 F) + 1)")
            .grid_ints(1..=f)
            .range(RandomRange::IntLinear { lo: 0, hi: f })
            .bounds(0.0, f as f64),
        ParamSpec::int("depth", 0, "maximum depth (0: unlimited)")
            .grid_ints([1, 2, 5, 10, 25])
            .range(RandomRange::IntLinear { lo: 0, hi: 25 })
            .bounds(0.0, f64::INFINITY),
        ParamSpec::int("S", 1, "random seed")
            .grid_ints(2..=11)
            .range(RandomRange::IntLinear { lo: 1, hi: 1000 }),
    ]
}

/// Features tried per split when `K = 0`.
pub fn default_features(n_features: usize) -> usize {
    ((n_features.max(1) as f64).log2().floor() as usize + 1).min(n_features.max(1))
}

#[derive(Clone, Debug)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_classes: usize,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Per-class vote counts; they sum to the number of trees.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        votes
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let v: Vec<f64> = self.votes(x).into_iter().map(|c| c as f64).collect();
        argmax(&v)
    }
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<ForestModel> {
    let n_trees = cfg.int("I")? as usize;
    let k = match cfg.int("K")? as usize {
        0 => default_features(train.n_features()),
        k => k,
    };
    let depth = cfg.int("depth")? as usize;
    let seed = cfg.int("S")? as u64;
    let params = GrowParams {
        criterion: Criterion::InfoGain,
        min_leaf: 1,
        c45_min_split: false,
        max_depth: (depth > 0).then_some(depth),
        features_per_split: Some(k),
    };
    let n = train.len();
    let trees = par::map_range(n_trees, |t| {
        let mut rng = Rng::derive(seed, t as u64);
        let bag: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
        Tree::grow(train, &bag, &params, Some(&mut rng))
    });
    Ok(ForestModel {
        trees,
        n_classes: train.n_classes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierId;

    #[test]
    fn default_feature_count() {
        assert_eq!(default_features(1), 1);
        assert_eq!(default_features(2), 2);
        assert_eq!(default_features(3), 2);
        assert_eq!(default_features(10), 4);
        assert_eq!(default_features(16), 5);
    }

    #[test]
    fn votes_sum_to_tree_count_and_repeat() {
        let mut rng = Rng::new(2);
        let rows: Vec<[f64; 3]> = (0..90).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + r[1] > 0.0) + usize::from(r[2] > 1.0)).collect();
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let schema = ClassifierId::RandomForest.schema(3);
        let cfg = ClassifierConfig::default_for(ClassifierId::RandomForest, 3)
            .with(&schema, "I", 17i64)
            .unwrap();
        let a = fit(&cfg.validated(&schema).unwrap(), &s).unwrap();
        let b = fit(&cfg.validated(&schema).unwrap(), &s).unwrap();
        for r in s.rows() {
            let v = a.votes(r);
            assert_eq!(v.iter().sum::<usize>(), 17);
            assert_eq!(v, b.votes(r));
        }
    }
}
