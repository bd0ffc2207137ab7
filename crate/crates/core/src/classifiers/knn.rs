//! k-nearest neighbours under Euclidean distance.

use super::{ClassifierConfig, ParamSpec, RandomRange};
use crate::data::Samples;
use crate::error::Result;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::int("K", 1, "number of neighbours")
            .grid_ints([2, 3, 5, 7, 10, 15, 20, 30, 50])
            .range(RandomRange::IntLog { lo: 1, hi: 50 })
            .bounds(1.0, f64::INFINITY),
        ParamSpec::flag("I", "weight votes by 1/distance"),
        ParamSpec::flag("F", "weight votes by 1 - distance/diameter"),
        ParamSpec::flag("X", "pick k <= K by leave-one-out on the training set"),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    InverseDistance,
    Similarity,
}

#[derive(Clone, Debug)]
pub struct KnnModel {
    train: Samples,
    k: usize,
    weighting: Weighting,
    /// Diagonal of the training bounding box; normalizes similarity weights.
    diameter: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KnnModel {
    pub fn new(train: Samples, k: usize, weighting: Weighting) -> Self {
        let f = train.n_features();
        let mut lo = vec![f64::INFINITY; f];
        let mut hi = vec![f64::NEG_INFINITY; f];
        for row in train.rows() {
            for j in 0..f {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let diameter = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt()
            .max(1e-12);
        KnnModel {
            train,
            k: k.max(1),
            weighting,
            diameter,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(distance, index)` of the `k` nearest training rows, nearest first,
    /// ties broken by training index. `skip` excludes one row.
    fn neighbours(&self, x: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = (0..self.train.len())
            .filter(|&i| Some(i) != skip)
            .map(|i| (sq_dist(self.train.row(i), x), i))
            .collect();
        let k = k.min(all.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < all.len() {
            all.select_nth_unstable_by(k, cmp);
            all.truncate(k);
        }
        all.sort_by(cmp);
        for n in all.iter_mut() {
            n.0 = n.0.sqrt();
        }
        all
    }

    fn weight(&self, d: f64) -> f64 {
        match self.weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDistance => 1.0 / d.max(1e-12),
            Weighting::Similarity => (1.0 - d / self.diameter).max(1e-12),
        }
    }

    /// Weighted vote over the first `k` of `neighbours`.
    fn vote(&self, neighbours: &[(f64, usize)], k: usize) -> usize {
        let n_classes = self.train.n_classes();
        let mut score = vec![0.0; n_classes];
        let mut nearest = vec![f64::INFINITY; n_classes];
        for &(d, i) in neighbours.iter().take(k) {
            let c = self.train.label(i);
            score[c] += self.weight(d);
            nearest[c] = nearest[c].min(d);
        }
        let mut best = 0;
        for c in 1..n_classes {
            let better = score[c] > score[best]
                || (score[c] == score[best] && nearest[c] < nearest[best]);
            if better {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let nb = self.neighbours(x, self.k, None);
        self.vote(&nb, self.k)
    }
}

/// Best `k` in `1..=max_k` by leave-one-out accuracy; smallest `k` on ties.
fn select_k(model: &KnnModel, max_k: usize) -> usize {
    let train = &model.train;
    let mut correct = vec![0usize; max_k + 1];
    for i in 0..train.len() {
        let nb = model.neighbours(train.row(i), max_k, Some(i));
        for (k, hits) in correct.iter_mut().enumerate().skip(1) {
            if model.vote(&nb, k) == train.label(i) {
                *hits += 1;
            }
        }
    }
    (1..=max_k).fold(1, |best, k| if correct[k] > correct[best] { k } else { best })
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<KnnModel> {
    let k = cfg.int("K")?;
    if k < 1 {
        return Err(cfg.range_error("K", format!("need K >= 1, got {k}")));
    }
    let weighting = if cfg.flag("I")? {
        Weighting::InverseDistance
    } else if cfg.flag("F")? {
        Weighting::Similarity
    } else {
        Weighting::Uniform
    };
    let mut model = KnnModel::new(train.clone(), k as usize, weighting);
    if cfg.flag("X")? && model.k > 1 {
        let max_k = model.k.min(train.len().saturating_sub(1)).max(1);
        model.k = select_k(&model, max_k);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierId, Learner, Predict};
    use crate::numeric::Rng;

    fn cfg(k: i64, inverse: bool) -> ClassifierConfig {
        let schema = ClassifierId::Knn.schema(2);
        schema
            .default_config()
            .with(&schema, "K", k)
            .unwrap()
            .with(&schema, "I", inverse)
            .unwrap()
    }

    #[test]
    fn hand_examples() {
        let s = Samples::from_rows(&[[0.0, 0.0], [1.0, 1.0]], &[0, 1]).unwrap();
        assert_eq!(cfg(1, false).fit(&s).unwrap().predict(&[0.1, 0.0]).unwrap(), 0);

        let s = Samples::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.1, 0.0]], &[0, 1, 1]).unwrap();
        assert_eq!(cfg(3, false).fit(&s).unwrap().predict(&[0.5, 0.0]).unwrap(), 1);
        // 1/0.05 = 20 outweighs 1/0.95 + 1/1.05 ≈ 2.0
        assert_eq!(cfg(3, true).fit(&s).unwrap().predict(&[0.05, 0.0]).unwrap(), 0);
    }

    #[test]
    fn two_way_tie_goes_to_the_nearest_class() {
        let s = Samples::from_rows(&[[0.0], [3.0], [1.0], [2.5]], &[1, 0, 1, 0]).unwrap();
        let m = KnnModel::new(s, 2, Weighting::Uniform);
        // neighbours of 1.9: 2.5 (class 0) then 1.0 (class 1)
        assert_eq!(m.predict(&[1.9]), 0);
        assert_eq!(m.predict(&[1.6]), 1);
    }

    /// Independent oracle: full sort of all distances and a plain count.
    fn oracle(train: &Samples, x: &[f64], k: usize) -> usize {
        let mut d: Vec<(f64, usize)> = (0..train.len())
            .map(|i| {
                let s: f64 = train.row(i).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                (s.sqrt(), i)
            })
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; train.n_classes()];
        let mut nearest = vec![f64::MAX; train.n_classes()];
        for &(dist, i) in &d[..k] {
            votes[train.label(i)] += 1;
            if dist < nearest[train.label(i)] {
                nearest[train.label(i)] = dist;
            }
        }
        let top = *votes.iter().max().unwrap();
        (0..train.n_classes())
            .filter(|&c| votes[c] == top)
            .min_by(|&a, &b| nearest[a].partial_cmp(&nearest[b]).unwrap().then(a.cmp(&b)))
            .unwrap()
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = Rng::new(31);
        for trial in 0..4 {
            let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.normal(), rng.normal()]).collect();
            let labels: Vec<usize> = (0..100).map(|_| rng.below(4)).collect();
            let train = Samples::from_rows(&rows, &labels).unwrap();
            for k in [1, 3, 5] {
                let m = KnnModel::new(train.clone(), k, Weighting::Uniform);
                for _ in 0..50 {
                    let x = [rng.normal() * 1.5, rng.normal() * 1.5];
                    assert_eq!(m.predict(&x), oracle(&train, &x, k), "trial {trial} k {k}");
                }
            }
        }
    }

    #[test]
    fn loo_selection_is_inert_at_one_neighbour() {
        let s = Samples::from_rows(&[[0.0], [0.2], [1.0], [1.3], [0.9]], &[0, 0, 1, 1, 0]).unwrap();
        let schema = ClassifierId::Knn.schema(1);
        let c = schema.default_config().with(&schema, "X", true).unwrap();
        let m = fit(&c, &s).unwrap();
        assert_eq!(m.k(), 1);
        let c = c.with(&schema, "K", 4i64).unwrap();
        let m = fit(&c, &s).unwrap();
        assert!((1..=4).contains(&m.k()));
    }
}
