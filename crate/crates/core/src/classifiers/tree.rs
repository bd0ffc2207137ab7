//! Axis-aligned binary decision trees shared by C4.5, CART and the random
//! forest: growth under a split criterion plus the pruning primitives.

use super::argmax;
use crate::data::Samples;
use crate::numeric::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Criterion {
    Gini,
    InfoGain,
    /// C4.5: gain ratio among splits with at least average gain.
    GainRatio,
}

#[derive(Clone, Debug)]
pub(crate) struct GrowParams {
    pub criterion: Criterion,
    pub min_leaf: usize,
    /// Use C4.5's `clamp(0.1 n / classes, M, 25)` as the branch minimum.
    pub c45_min_split: bool,
    pub max_depth: Option<usize>,
    /// Random feature subset per node (random trees).
    pub features_per_split: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub counts: Vec<f64>,
    pub split: Option<Split>,
}

impl Node {
    pub fn n(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn majority(&self) -> usize {
        argmax(&self.counts)
    }

    /// Training errors if this node were a leaf.
    pub fn errors(&self) -> f64 {
        self.n() - self.counts[self.majority()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tree {
    pub nodes: Vec<Node>,
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

fn gini(counts: &[f64], n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n).powi(2)).sum::<f64>()
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// Criterion value used to pick the threshold (gain or impurity drop).
    gain: f64,
    ratio: f64,
}

fn class_counts(samples: &Samples, idx: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; samples.n_classes()];
    for &i in idx {
        counts[samples.label(i)] += 1.0;
    }
    counts
}

/// Best threshold on one feature, or None if no admissible split exists.
fn best_threshold(
    samples: &Samples,
    idx: &mut [usize],
    feature: usize,
    parent: &[f64],
    params: &GrowParams,
    min_branch: usize,
) -> Option<Candidate> {
    idx.sort_by(|&a, &b| {
        samples
            .value(a, feature)
            .total_cmp(&samples.value(b, feature))
            .then(a.cmp(&b))
    });
    let n = idx.len();
    let nf = n as f64;
    let c = parent.len();
    let mut left = vec![0.0; c];
    let mut right = parent.to_vec();
    let parent_impurity = match params.criterion {
        Criterion::Gini => gini(parent, nf),
        _ => entropy(parent, nf),
    };
    let mut best: Option<(f64, usize)> = None;
    let mut n_candidates = 0usize;
    for pos in 1..n {
        let moved = samples.label(idx[pos - 1]);
        left[moved] += 1.0;
        right[moved] -= 1.0;
        let (a, b) = (samples.value(idx[pos - 1], feature), samples.value(idx[pos], feature));
        if a >= b {
            continue;
        }
        if pos < min_branch || n - pos < min_branch {
            continue;
        }
        n_candidates += 1;
        let (nl, nr) = (pos as f64, (n - pos) as f64);
        let child = match params.criterion {
            Criterion::Gini => (nl * gini(&left, nl) + nr * gini(&right, nr)) / nf,
            _ => (nl * entropy(&left, nl) + nr * entropy(&right, nr)) / nf,
        };
        let gain = parent_impurity - child;
        if best.is_none_or(|(g, _)| gain > g + 1e-12) {
            best = Some((gain, pos));
        }
    }
    let (mut gain, pos) = best?;
    if params.criterion == Criterion::GainRatio {
        // C4.5 penalty for choosing among many thresholds
        gain -= (n_candidates as f64).log2() / nf;
    }
    let (a, b) = (samples.value(idx[pos - 1], feature), samples.value(idx[pos], feature));
    let mut threshold = 0.5 * (a + b);
    if threshold >= b {
        threshold = a;
    }
    let (pl, pr) = (pos as f64 / nf, (n - pos) as f64 / nf);
    let split_info = -(pl * pl.log2() + pr * pr.log2());
    Some(Candidate {
        feature,
        threshold,
        gain,
        ratio: if split_info > 0.0 { gain / split_info } else { 0.0 },
    })
}

impl Tree {
    /// Grows a tree on `samples[indices]`. `rng` is required when
    /// `features_per_split` is set.
    pub fn grow(samples: &Samples, indices: &[usize], params: &GrowParams, mut rng: Option<&mut Rng>) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        let root_counts = class_counts(samples, indices);
        tree.nodes.push(Node {
            counts: root_counts,
            split: None,
        });
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, indices.to_vec(), 0)];
        let f = samples.n_features();
        let mut order: Vec<usize> = (0..f).collect();
        while let Some((node_id, mut idx, depth)) = stack.pop() {
            let counts = tree.nodes[node_id].counts.clone();
            let n = idx.len();
            let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
            if pure || n < 2 * params.min_leaf.max(1) {
                continue;
            }
            if params.max_depth.is_some_and(|d| depth >= d) {
                continue;
            }
            let min_branch = if params.c45_min_split {
                let m = 0.1 * n as f64 / samples.n_classes() as f64;
                (m.min(25.0).max(params.min_leaf as f64)).ceil() as usize
            } else {
                params.min_leaf.max(1)
            };

            let chosen = match params.features_per_split {
                Some(k) => {
                    let rng = rng.as_deref_mut().expect("random trees need an rng");
                    rng.shuffle(&mut order);
                    let k = k.clamp(1, f);
                    let mut best: Option<Candidate> = None;
                    for (tried, &feat) in order.iter().enumerate() {
                        if tried >= k && best.is_some_and(|b| b.gain > 0.0) {
                            break;
                        }
                        if let Some(c) = best_threshold(samples, &mut idx, feat, &counts, params, min_branch) {
                            if best.is_none_or(|b| c.gain > b.gain) {
                                best = Some(c);
                            }
                        }
                    }
                    best
                }
                None => {
                    let cands: Vec<Candidate> = (0..f)
                        .filter_map(|feat| best_threshold(samples, &mut idx, feat, &counts, params, min_branch))
                        .collect();
                    select(&cands, params.criterion)
                }
            };
            let Some(split) = chosen else { continue };
            // zero-gain splits are allowed so that XOR-like structure can
            // still be separated at the next level
            if split.gain < -1e-12 {
                continue;
            }
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| samples.value(i, split.feature) <= split.threshold);
            if left_idx.is_empty() || right_idx.is_empty() {
                continue;
            }
            let left = tree.nodes.len();
            tree.nodes.push(Node {
                counts: class_counts(samples, &left_idx),
                split: None,
            });
            let right = tree.nodes.len();
            tree.nodes.push(Node {
                counts: class_counts(samples, &right_idx),
                split: None,
            });
            tree.nodes[node_id].split = Some(Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            });
            stack.push((right, right_idx, depth + 1));
            stack.push((left, left_idx, depth + 1));
        }
        tree
    }

    pub fn leaf(&self, x: &[f64]) -> usize {
        self.leaf_with(x, |_| false)
    }

    /// Descends until a leaf or a node for which `stop` holds.
    pub fn leaf_with(&self, x: &[f64], stop: impl Fn(usize) -> bool) -> usize {
        let mut id = 0;
        while let Some(s) = &self.nodes[id].split {
            if stop(id) {
                break;
            }
            id = if x[s.feature] <= s.threshold { s.left } else { s.right };
        }
        id
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.nodes[self.leaf(x)].majority()
    }

    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        self.nodes[id].split.as_ref().map(|s| (s.left, s.right))
    }

    /// Reachable nodes in post-order (children before parents).
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((id, expanded)) = stack.pop() {
            match (self.children(id), expanded) {
                (Some((l, r)), false) => {
                    stack.push((id, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => out.push(id),
            }
        }
        out
    }

    pub fn collapse(&mut self, id: usize) {
        self.nodes[id].split = None;
    }

    pub fn leaves_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match self.children(n) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(n),
            }
        }
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves_under(0).len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, id: usize) -> usize {
            match t.children(id) {
                Some((l, r)) => 1 + go(t, l).max(go(t, r)),
                None => 0,
            }
        }
        go(self, 0)
    }

    /// Drops unreachable nodes left behind by collapses.
    pub fn compact(&self) -> Tree {
        let mut nodes = Vec::new();
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            map[id] = nodes.len();
            nodes.push(self.nodes[id].clone());
            if let Some((l, r)) = self.children(id) {
                queue.push_back(l);
                queue.push_back(r);
            }
        }
        for node in nodes.iter_mut() {
            if let Some(s) = node.split.as_mut() {
                s.left = map[s.left];
                s.right = map[s.right];
            }
        }
        Tree { nodes }
    }

    /// Weakest-link cost-complexity pruning.
    ///
    /// Returns, for every node, the complexity value at which it becomes a
    /// leaf (`INFINITY` for leaves of the full tree), plus the ascending
    /// sequence of distinct values. Errors are measured as a fraction of the
    /// root's instance count.
    pub fn cost_complexity(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes[0].n().max(1.0);
        let mut alpha_of = vec![f64::INFINITY; self.nodes.len()];
        let mut working = self.clone();
        let mut sequence = Vec::new();
        loop {
            let mut leaf_err = vec![0.0; working.nodes.len()];
            let mut leaf_cnt = vec![0usize; working.nodes.len()];
            let mut g_min = f64::INFINITY;
            let order = working.post_order();
            let mut g = vec![f64::INFINITY; working.nodes.len()];
            for &id in &order {
                match working.children(id) {
                    None => {
                        leaf_err[id] = working.nodes[id].errors();
                        leaf_cnt[id] = 1;
                    }
                    Some((l, r)) => {
                        leaf_err[id] = leaf_err[l] + leaf_err[r];
                        leaf_cnt[id] = leaf_cnt[l] + leaf_cnt[r];
                        let gain = (working.nodes[id].errors() - leaf_err[id]) / n;
                        g[id] = gain / (leaf_cnt[id] - 1) as f64;
                        g_min = g_min.min(g[id]);
                    }
                }
            }
            if !g_min.is_finite() {
                break;
            }
            let g_min = g_min.max(0.0);
            for &id in &order {
                if working.children(id).is_some() && g[id] <= g_min + 1e-12 {
                    alpha_of[id] = g_min;
                }
            }
            // collapse top-down so a collapsed ancestor hides its subtree
            let mut stack = vec![0usize];
            while let Some(id) = stack.pop() {
                if let Some((l, r)) = working.children(id) {
                    if g[id] <= g_min + 1e-12 {
                        working.collapse(id);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
            sequence.push(g_min);
        }
        // a node below an ancestor pruned earlier inherits that value
        let mut stack = vec![(0usize, f64::INFINITY)];
        while let Some((id, bound)) = stack.pop() {
            let a = alpha_of[id].min(bound);
            alpha_of[id] = a;
            if let Some((l, r)) = self.children(id) {
                stack.push((l, a));
                stack.push((r, a));
            }
        }
        sequence.dedup();
        (alpha_of, sequence)
    }
}

fn select(cands: &[Candidate], criterion: Criterion) -> Option<Candidate> {
    match criterion {
        Criterion::GainRatio => {
            let positive: Vec<&Candidate> = cands.iter().filter(|c| c.gain > 1e-12).collect();
            if positive.is_empty() {
                return select(cands, Criterion::InfoGain);
            }
            let avg = positive.iter().map(|c| c.gain).sum::<f64>() / positive.len() as f64;
            positive
                .into_iter()
                .filter(|c| c.gain >= avg - 1e-3)
                .fold(None, |best: Option<Candidate>, c| match best {
                    Some(b) if b.ratio >= c.ratio => Some(b),
                    _ => Some(*c),
                })
        }
        _ => cands.iter().fold(None, |best: Option<Candidate>, c| match best {
            Some(b) if b.gain >= c.gain => Some(b),
            _ => Some(*c),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(criterion: Criterion) -> GrowParams {
        GrowParams {
            criterion,
            min_leaf: 1,
            c45_min_split: false,
            max_depth: None,
            features_per_split: None,
        }
    }

    #[test]
    fn first_threshold_between_two_and_three() {
        let s = Samples::from_rows(&[[1.0], [2.0], [3.0], [4.0]], &[0, 0, 1, 1]).unwrap();
        // hand values for thresholds after 1, 2, 3:
        // gini drop 1/6, 1/2, 1/6; entropy gain 0.311, 1.0, 0.311
        for c in [Criterion::Gini, Criterion::InfoGain, Criterion::GainRatio] {
            let t = Tree::grow(&s, &[0, 1, 2, 3], &params(c), None);
            let split = t.nodes[0].split.as_ref().unwrap();
            assert!(split.threshold > 2.0 && split.threshold < 3.0, "{c:?}");
        }
    }

    /// Brute-force oracle: no single axis split separates XOR, so a perfect
    /// fit needs depth two.
    #[test]
    fn xor_fits_at_depth_two() {
        let rows = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let labels = [0, 0, 1, 1];
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let stump_best = (0..2)
            .flat_map(|f| [false, true].map(move |flip| (f, flip)))
            .map(|(f, flip)| {
                rows.iter()
                    .zip(&labels)
                    .filter(|(r, &y)| usize::from((r[f] > 0.5) != flip) == y)
                    .count()
            })
            .max()
            .unwrap();
        assert!(stump_best < 4);
        for c in [Criterion::Gini, Criterion::InfoGain, Criterion::GainRatio] {
            let t = Tree::grow(&s, &[0, 1, 2, 3], &params(c), None);
            assert_eq!(t.depth(), 2, "{c:?}");
            for (r, y) in rows.iter().zip(&labels) {
                assert_eq!(t.predict(r), *y, "{c:?}");
            }
        }
    }

    #[test]
    fn cost_complexity_sequence_is_monotone() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let labels: Vec<usize> = (0..40).map(|i| (i / 3 + i % 2) % 2).collect();
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let idx: Vec<usize> = (0..40).collect();
        let t = Tree::grow(&s, &idx, &params(Criterion::Gini), None);
        let (alpha_of, seq) = t.cost_complexity();
        assert!(seq.windows(2).all(|w| w[0] < w[1]));
        assert!(alpha_of[0].is_finite());
        for id in t.post_order() {
            if let Some((l, r)) = t.children(id) {
                assert!(alpha_of[l] <= alpha_of[id] && alpha_of[r] <= alpha_of[id]);
            }
        }
        // the unpruned tree fits its training data
        for (r, y) in rows.iter().zip(&labels) {
            assert_eq!(t.predict(r), *y);
        }
    }
}
