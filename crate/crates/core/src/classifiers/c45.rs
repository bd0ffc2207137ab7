//! C4.5: gain-ratio splits with confidence-based error pruning, or
//! reduced-error pruning on a held-out fold.

use statrs::function::erf::erf_inv;

use super::tree::{Criterion, GrowParams, Tree};
use super::{ClassifierConfig, ParamSpec, RandomRange};
use crate::data::{stratify, Samples};
use crate::error::Result;
use crate::numeric::Rng;

/// Seed of the fold split used by reduced-error pruning.
const REP_SEED: u64 = 1;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::flag("U", "grow an unpruned tree"),
        ParamSpec::flag("S", "disable subtree raising (accepted, no effect)").inert(),
        ParamSpec::flag("A", "Laplace-smoothed leaf probabilities"),
        ParamSpec::real("C", 0.25, "pruning confidence factor")
            .grid_reals([0.05, 0.1, 0.15, 0.35, 0.5])
            .range(RandomRange::RealLinear { lo: 0.05, hi: 0.5 })
            .bounds(1e-6, 0.5),
        ParamSpec::int("M", 2, "minimum instances per leaf")
            .grid_ints([1, 3, 5, 10, 20])
            .range(RandomRange::IntLog { lo: 1, hi: 20 })
            .bounds(1.0, f64::INFINITY),
        ParamSpec::int("N", 0, "reduced-error pruning folds (below 2: off)")
            .grid_ints([2, 3, 5, 10])
            .range(RandomRange::IntLinear { lo: 0, hi: 10 })
            .bounds(0.0, 1000.0),
    ]
}

/// Upper confidence bound on the extra errors at a leaf holding `n`
/// instances with `e` training errors (C4.5's pessimistic estimate).
pub fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = std::f64::consts::SQRT_2 * erf_inv(1.0 - 2.0 * cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

fn estimated_errors(tree: &Tree, id: usize, cf: f64) -> f64 {
    let node = &tree.nodes[id];
    let e = node.errors();
    e + added_errors(node.n(), e, cf)
}

fn error_prune(tree: &mut Tree, cf: f64) {
    let mut subtree_train = vec![0.0; tree.nodes.len()];
    let mut subtree_est = vec![0.0; tree.nodes.len()];
    for id in tree.post_order() {
        match tree.children(id) {
            None => {
                subtree_train[id] = tree.nodes[id].errors();
                subtree_est[id] = estimated_errors(tree, id, cf);
            }
            Some((l, r)) => {
                let leaf_train = tree.nodes[id].errors();
                let leaf_est = estimated_errors(tree, id, cf);
                let train = subtree_train[l] + subtree_train[r];
                let est = subtree_est[l] + subtree_est[r];
                // collapse splits that do not help even on training data,
                // then the pessimistic comparison
                if train >= leaf_train - 1e-3 || leaf_est <= est + 0.1 {
                    tree.collapse(id);
                    subtree_train[id] = leaf_train;
                    subtree_est[id] = leaf_est;
                } else {
                    subtree_train[id] = train;
                    subtree_est[id] = est;
                }
            }
        }
    }
}

fn reduced_error_prune(tree: &mut Tree, prune: &Samples, prune_idx: &[usize]) {
    let mut hits = vec![0.0f64; tree.nodes.len()];
    let mut wrong_leaf = vec![0.0f64; tree.nodes.len()];
    for &i in prune_idx {
        let x = prune.row(i);
        let y = prune.label(i);
        let mut id = 0;
        loop {
            hits[id] += 1.0;
            if tree.nodes[id].majority() != y {
                wrong_leaf[id] += 1.0;
            }
            match &tree.nodes[id].split {
                Some(s) => id = if x[s.feature] <= s.threshold { s.left } else { s.right },
                None => break,
            }
        }
    }
    let mut subtree = vec![0.0; tree.nodes.len()];
    for id in tree.post_order() {
        subtree[id] = match tree.children(id) {
            None => wrong_leaf[id],
            Some((l, r)) => {
                let below = subtree[l] + subtree[r];
                if wrong_leaf[id] <= below {
                    tree.collapse(id);
                    wrong_leaf[id]
                } else {
                    below
                }
            }
        };
    }
}

#[derive(Clone, Debug)]
pub struct C45Model {
    tree: Tree,
    laplace: bool,
}

impl C45Model {
    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let counts = &self.tree.nodes[self.tree.leaf(x)].counts;
        let n: f64 = counts.iter().sum();
        let k = counts.len() as f64;
        if self.laplace {
            counts.iter().map(|c| (c + 1.0) / (n + k)).collect()
        } else {
            counts.iter().map(|c| c / n.max(1e-300)).collect()
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.tree.predict(x)
    }
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<C45Model> {
    let unpruned = cfg.flag("U")?;
    let laplace = cfg.flag("A")?;
    let cf = cfg.real("C")?;
    let min_leaf = cfg.int("M")? as usize;
    let folds = cfg.int("N")? as usize;
    let params = GrowParams {
        criterion: Criterion::GainRatio,
        min_leaf,
        c45_min_split: true,
        max_depth: None,
        features_per_split: None,
    };
    let all: Vec<usize> = (0..train.len()).collect();
    let tree = if unpruned {
        Tree::grow(train, &all, &params, None)
    } else if folds >= 2 {
        let mut rng = Rng::new(REP_SEED);
        let parts = stratify(train.labels(), train.n_classes(), folds, &mut rng);
        let prune_idx = &parts[folds - 1];
        let grow_idx: Vec<usize> = parts[..folds - 1].concat();
        if grow_idx.is_empty() {
            Tree::grow(train, &all, &params, None)
        } else {
            let mut t = Tree::grow(train, &grow_idx, &params, None);
            reduced_error_prune(&mut t, train, prune_idx);
            t
        }
    } else {
        let mut t = Tree::grow(train, &all, &params, None);
        error_prune(&mut t, cf);
        t
    };
    Ok(C45Model {
        tree: tree.compact(),
        laplace,
    })
}
