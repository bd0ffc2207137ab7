//! CART: Gini splits with weakest-link cost-complexity pruning, the pruning
//! level chosen by internal cross-validation.

use super::tree::{Criterion, GrowParams, Tree};
use super::{ClassifierConfig, ParamSpec, RandomRange};
use crate::data::{stratify, Samples};
use crate::error::Result;
use crate::numeric::Rng;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::int("S", 1, "random seed for subsampling and pruning folds")
            .grid_ints(2..=11)
            .range(RandomRange::IntLinear { lo: 1, hi: 1000 }),
        ParamSpec::real("C", 1.0, "fraction of the training set used")
            .grid_reals([0.1, 0.25, 0.5, 0.75])
            .range(RandomRange::RealLinear { lo: 0.1, hi: 1.0 })
            .bounds(1e-6, 1.0),
        ParamSpec::int("M", 2, "minimum instances per leaf")
            .grid_ints([1, 3, 5, 10, 20])
            .range(RandomRange::IntLog { lo: 1, hi: 20 })
            .bounds(1.0, f64::INFINITY),
        ParamSpec::int("N", 5, "internal cross-validation folds for pruning")
            .grid_ints([2, 3, 10])
            .range(RandomRange::IntLinear { lo: 2, hi: 10 })
            .bounds(2.0, 1000.0),
        ParamSpec::flag("A", "one-standard-error rule when picking the pruned tree"),
        ParamSpec::flag("H", "heuristic for nominal attributes (no effect on numeric data)").inert(),
        ParamSpec::flag("U", "grow an unpruned tree"),
    ]
}

#[derive(Clone, Debug)]
pub struct CartModel {
    tree: Tree,
}

impl CartModel {
    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.tree.predict(x)
    }
}

fn subset_tree(samples: &Samples, idx: &[usize], min_leaf: usize) -> Tree {
    let params = GrowParams {
        criterion: Criterion::Gini,
        min_leaf,
        c45_min_split: false,
        max_depth: None,
        features_per_split: None,
    };
    Tree::grow(samples, idx, &params, None)
}

fn pruned_at(tree: &Tree, alpha_of: &[f64], alpha: f64) -> Tree {
    let mut t = tree.clone();
    for id in tree.post_order() {
        if t.children(id).is_some() && alpha_of[id] <= alpha {
            t.collapse(id);
        }
    }
    t.compact()
}

/// Index into `candidates` picked from per-candidate held-out error counts
/// over `n` instances. Ties and the one-SE rule favour the simpler tree.
pub(crate) fn choose(errors: &[f64], n: f64, one_se: bool) -> usize {
    let best = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = if one_se {
        let rate = best / n;
        best + n * (rate * (1.0 - rate) / n).sqrt()
    } else {
        best
    };
    (0..errors.len()).rev().find(|&k| errors[k] <= limit + 1e-9).unwrap_or(0)
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<CartModel> {
    let seed = cfg.int("S")? as u64;
    let fraction = cfg.real("C")?;
    let min_leaf = cfg.int("M")? as usize;
    let folds = cfg.int("N")? as usize;
    let one_se = cfg.flag("A")?;
    let unpruned = cfg.flag("U")?;

    let mut rng = Rng::new(seed);
    let mut idx: Vec<usize> = (0..train.len()).collect();
    if fraction < 1.0 {
        rng.shuffle(&mut idx);
        let keep = ((fraction * idx.len() as f64).round() as usize).clamp(2.min(idx.len()), idx.len());
        idx.truncate(keep);
        idx.sort_unstable();
    }
    let data = train.subset(&idx);
    let all: Vec<usize> = (0..data.len()).collect();
    let tree = subset_tree(&data, &all, min_leaf);
    if unpruned {
        return Ok(CartModel { tree: tree.compact() });
    }
    let (alpha_of, mut seq) = tree.cost_complexity();
    if seq.is_empty() {
        return Ok(CartModel { tree });
    }
    if seq[0] > 0.0 {
        seq.insert(0, 0.0);
    }
    // evaluate each fold tree at the geometric midpoints of the sequence
    let probes: Vec<f64> = (0..seq.len())
        .map(|k| match seq.get(k + 1) {
            Some(next) => (seq[k] * next).sqrt(),
            None => seq[k],
        })
        .collect();
    let parts = stratify(data.labels(), data.n_classes(), folds, &mut rng);
    let mut errors = vec![0.0; probes.len()];
    for held in &parts {
        if held.is_empty() {
            continue;
        }
        let grow: Vec<usize> = parts.iter().filter(|p| !std::ptr::eq(*p, held)).flatten().copied().collect();
        if grow.is_empty() {
            continue;
        }
        let fold_tree = subset_tree(&data, &grow, min_leaf);
        let (fold_alpha, _) = fold_tree.cost_complexity();
        for (k, &beta) in probes.iter().enumerate() {
            for &i in held {
                let leaf = fold_tree.leaf_with(data.row(i), |id| fold_alpha[id] <= beta);
                if fold_tree.nodes[leaf].majority() != data.label(i) {
                    errors[k] += 1.0;
                }
            }
        }
    }
    let k = choose(&errors, data.len() as f64, one_se);
    Ok(CartModel {
        tree: pruned_at(&tree, &alpha_of, seq[k]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierId, ParamValue, Predict};

    #[test]
    fn choose_prefers_simpler_on_ties() {
        assert_eq!(choose(&[5.0, 3.0, 3.0, 9.0], 100.0, false), 2);
        // SE at rate 0.03 over 100 is about 1.7 errors
        assert_eq!(choose(&[5.0, 3.0, 4.5, 9.0], 100.0, true), 2);
        assert_eq!(choose(&[5.0, 3.0, 4.5, 9.0], 100.0, false), 1);
    }

    fn noisy(seed: u64) -> Samples {
        let mut rng = Rng::new(seed);
        let rows: Vec<[f64; 2]> = (0..150).map(|_| [rng.uniform(), rng.uniform()]).collect();
        let labels: Vec<usize> = rows
            .iter()
            .map(|r| usize::from(r[0] > 0.5) ^ usize::from(rng.bernoulli(0.15)))
            .collect();
        Samples::from_rows(&rows, &labels).unwrap()
    }

    fn leaves(s: &Samples, pairs: &[(&str, ParamValue)]) -> usize {
        let schema = ClassifierId::Cart.schema(2);
        let mut cfg = ClassifierConfig::default_for(ClassifierId::Cart, 2);
        for (k, v) in pairs {
            cfg.set(&schema, k, v.clone()).unwrap();
        }
        crate::classifiers::fit(&cfg, s).unwrap().as_cart().unwrap().n_leaves()
    }

    #[test]
    fn pruning_recovers_the_single_boundary() {
        let s = noisy(4);
        let full = leaves(&s, &[("U", true.into())]);
        let pruned = leaves(&s, &[]);
        let se = leaves(&s, &[("A", true.into())]);
        assert!(pruned < full, "{pruned} vs {full}");
        assert!(se <= pruned);
        assert!(se <= 4, "one-SE tree should be near the stump, got {se}");
    }

    #[test]
    fn training_fraction_and_seed_are_deterministic() {
        let s = noisy(8);
        let schema = ClassifierId::Cart.schema(2);
        let cfg = ClassifierConfig::default_for(ClassifierId::Cart, 2)
            .with(&schema, "C", 0.5)
            .unwrap();
        let a = crate::classifiers::fit(&cfg, &s).unwrap();
        let b = crate::classifiers::fit(&cfg, &s).unwrap();
        for r in s.rows() {
            assert_eq!(a.predict(r).unwrap(), b.predict(r).unwrap());
        }
    }
}
