//! Multilayer perceptron: one sigmoid hidden layer, softmax output,
//! cross-entropy loss, per-instance SGD with momentum.

use super::{argmax, softmax_in_place, ClassifierConfig, FeatureScaler, ParamSpec, RandomRange};
use crate::data::Samples;
use crate::error::{Error, Result};
use crate::numeric::Rng;

/// Seed of the weight initialization and epoch shuffles.
const SEED: u64 = 0;
/// Epochs without validation improvement before stopping.
const PATIENCE: usize = 20;
const INIT_SCALE: f64 = 0.05;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::flag("D", "halve the learning rate after every epoch"),
        ParamSpec::flag("C", "skip nominal-to-binary filtering (accepted, no effect)").inert(),
        ParamSpec::choice("H", "a", &["a", "1", "2", "4", "8", "16", "32"], "hidden units ('a' = (F + C) / 2)"),
        ParamSpec::real("L", 0.3, "learning rate")
            .grid_reals([0.01, 0.05, 0.1, 0.5, 1.0])
            .range(RandomRange::RealLog { lo: 0.01, hi: 1.0 })
            .bounds(1e-12, f64::INFINITY),
        ParamSpec::real("M", 0.2, "momentum")
            .grid_reals([0.0, 0.5, 0.9])
            .range(RandomRange::RealLinear { lo: 0.0, hi: 0.9 })
            .bounds(0.0, 0.999_999),
        ParamSpec::int("N", 500, "training epochs")
            .grid_ints([50, 100, 1000])
            .range(RandomRange::IntLog { lo: 50, hi: 1000 })
            .bounds(1.0, f64::INFINITY),
        ParamSpec::int("V", 0, "validation percent for early stopping (0: off)")
            .grid_ints([10, 20, 30])
            .range(RandomRange::IntLinear { lo: 0, hi: 30 })
            .bounds(0.0, 50.0),
        ParamSpec::flag("E", "decouple validation from the epoch count (accepted, no effect)").inert(),
    ]
}

/// Width chosen by the hidden-layer spec `H`.
pub fn hidden_width(spec: &str, n_features: usize, n_classes: usize) -> Option<usize> {
    match spec {
        "a" => Some((((n_features + n_classes) as f64) / 2.0).round().max(1.0) as usize),
        s => s.parse().ok().filter(|&h| h > 0),
    }
}

/// Fully connected `inputs -> hidden -> outputs` network. Weights are stored
/// row-major with the bias as the last entry of every row, hidden layer
/// first.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    weights: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Scratch {
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Network {
    pub fn new(inputs: usize, hidden: usize, outputs: usize, rng: &mut Rng) -> Self {
        let n = hidden * (inputs + 1) + outputs * (hidden + 1);
        let weights = (0..n).map(|_| rng.uniform_range(-INIT_SCALE, INIT_SCALE)).collect();
        Network {
            inputs,
            hidden,
            outputs,
            weights,
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.weights
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn split_at_output(&self) -> usize {
        self.hidden * (self.inputs + 1)
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            hidden: vec![0.0; self.hidden],
            out: vec![0.0; self.outputs],
            delta_hidden: vec![0.0; self.hidden],
        }
    }

    fn forward(&self, x: &[f64], s: &mut Scratch) {
        let stride = self.inputs + 1;
        for (j, h) in s.hidden.iter_mut().enumerate() {
            let w = &self.weights[j * stride..(j + 1) * stride];
            let z: f64 = w[self.inputs] + w[..self.inputs].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *h = sigmoid(z);
        }
        let base = self.split_at_output();
        let stride = self.hidden + 1;
        for (k, o) in s.out.iter_mut().enumerate() {
            let w = &self.weights[base + k * stride..base + (k + 1) * stride];
            *o = w[self.hidden] + w[..self.hidden].iter().zip(&s.hidden).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax_in_place(&mut s.out);
    }

    /// Back-propagates one instance; adds its gradient into `grad` and
    /// returns its loss.
    fn backward(&self, x: &[f64], y: usize, s: &mut Scratch, grad: &mut [f64]) -> f64 {
        self.forward(x, s);
        let loss = -s.out[y].max(f64::MIN_POSITIVE).ln();
        s.out[y] -= 1.0;
        let base = self.split_at_output();
        let hs = self.hidden + 1;
        s.delta_hidden.iter_mut().for_each(|d| *d = 0.0);
        for k in 0..self.outputs {
            let d = s.out[k];
            let w = &self.weights[base + k * hs..base + (k + 1) * hs];
            let g = &mut grad[base + k * hs..base + (k + 1) * hs];
            for j in 0..self.hidden {
                g[j] += d * s.hidden[j];
                s.delta_hidden[j] += d * w[j];
            }
            g[self.hidden] += d;
        }
        let is = self.inputs + 1;
        for j in 0..self.hidden {
            let d = s.delta_hidden[j] * s.hidden[j] * (1.0 - s.hidden[j]);
            let g = &mut grad[j * is..(j + 1) * is];
            for (gi, xi) in g[..self.inputs].iter_mut().zip(x) {
                *gi += d * xi;
            }
            g[self.inputs] += d;
        }
        loss
    }

    /// Summed cross-entropy over a batch and its gradient.
    pub fn loss_and_gradient(&self, rows: &[&[f64]], labels: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.weights.len()];
        let mut s = self.scratch();
        let loss = rows
            .iter()
            .zip(labels)
            .map(|(x, &y)| self.backward(x, y, &mut s, &mut grad))
            .sum();
        (loss, grad)
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.scratch();
        self.forward(x, &mut s);
        s.out
    }
}

#[derive(Clone, Debug)]
pub struct MlpModel {
    scaler: FeatureScaler,
    network: Network,
    epochs: usize,
}

impl MlpModel {
    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Epochs actually run (fewer than `N` after early stopping).
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.network.probabilities(&self.scaler.apply(x)))
    }
}

/// Stratified hold-out of `percent` of each class.
fn holdout(train: &Samples, percent: usize, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut by_class = vec![Vec::new(); train.n_classes()];
    for i in 0..train.len() {
        by_class[train.label(i)].push(i);
    }
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for members in by_class.iter_mut() {
        rng.shuffle(members);
        let k = (members.len() as f64 * percent as f64 / 100.0).round() as usize;
        let k = k.min(members.len().saturating_sub(1));
        val.extend_from_slice(&members[..k]);
        fit.extend_from_slice(&members[k..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<MlpModel> {
    let decay = cfg.flag("D")?;
    let h_spec = cfg.choice("H")?;
    let rate = cfg.real("L")?;
    let momentum = cfg.real("M")?;
    let epochs = cfg.int("N")? as usize;
    let percent = cfg.int("V")? as usize;
    let hidden = hidden_width(&h_spec, train.n_features(), train.n_classes())
        .ok_or_else(|| cfg.range_error("H", format!("`{h_spec}` is not a width")))?;

    let scaler = FeatureScaler::min_max(train, -1.0, 1.0);
    let data = scaler.transform(train);
    let mut rng = Rng::new(SEED);
    let mut net = Network::new(data.n_features(), hidden, data.n_classes(), &mut rng);
    let (mut order, val) = if percent > 0 {
        holdout(&data, percent, &mut rng)
    } else {
        ((0..data.len()).collect(), Vec::new())
    };

    let mut velocity = vec![0.0; net.weights.len()];
    let mut grad = vec![0.0; net.weights.len()];
    let mut s = net.scratch();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stale = 0;
    let mut ran = 0;
    for epoch in 0..epochs {
        let lr = if decay { rate * 0.5f64.powi(epoch as i32) } else { rate };
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            total += net.backward(data.row(i), data.label(i), &mut s, &mut grad);
            for ((w, v), g) in net.weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = momentum * *v - lr * g;
                *w += *v;
            }
        }
        ran = epoch + 1;
        if !total.is_finite() || net.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence(format!("mlp loss became non-finite in epoch {ran}")));
        }
        if !val.is_empty() {
            let mut val_loss = 0.0;
            for &i in &val {
                net.forward(data.row(i), &mut s);
                val_loss -= s.out[data.label(i)].max(f64::MIN_POSITIVE).ln();
            }
            match &best {
                Some((b, _)) if val_loss >= *b => {
                    stale += 1;
                    if stale >= PATIENCE {
                        break;
                    }
                }
                _ => {
                    best = Some((val_loss, net.weights.clone()));
                    stale = 0;
                }
            }
        }
    }
    if let Some((_, w)) = best {
        net.weights = w;
    }
    Ok(MlpModel {
        scaler,
        network: net,
        epochs: ran,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierId, Predict};

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = Rng::new(17);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let labels = [0, 2, 1, 1, 0];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut net = Network::new(3, 4, 3, &mut rng);
        for w in net.params_mut() {
            *w = rng.normal();
        }
        let (_, grad) = net.loss_and_gradient(&refs, &labels);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..grad.len() {
            let mut plus = net.clone();
            plus.params_mut()[k] += h;
            let mut minus = net.clone();
            minus.params_mut()[k] -= h;
            let fd = (plus.loss_and_gradient(&refs, &labels).0 - minus.loss_and_gradient(&refs, &labels).0) / (2.0 * h);
            worst = worst.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8));
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn hidden_width_rule() {
        assert_eq!(hidden_width("a", 10, 10), Some(10));
        assert_eq!(hidden_width("a", 2, 10), Some(6));
        assert_eq!(hidden_width("a", 2, 3), Some(3));
        assert_eq!(hidden_width("16", 2, 3), Some(16));
        assert_eq!(hidden_width("0", 2, 3), None);
    }

    fn separable() -> Samples {
        let mut rng = Rng::new(9);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < 40 {
            let p = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            let s = p[0] - p[1];
            if s.abs() > 0.1 {
                rows.push(p);
                labels.push(usize::from(s > 0.0));
            }
        }
        Samples::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn defaults_fit_separable_data() {
        let s = separable();
        let cfg = ClassifierConfig::default_for(ClassifierId::Mlp, 2);
        let model = crate::classifiers::fit(&cfg, &s).unwrap();
        assert!(model.as_mlp().unwrap().epochs() <= 500);
        for r in s.rows().zip(s.labels()) {
            assert_eq!(model.predict(r.0).unwrap(), *r.1);
        }
    }

    #[test]
    fn early_stopping_and_decay() {
        // overlapping classes: validation loss bottoms out early
        let mut rng = Rng::new(12);
        let rows: Vec<[f64; 2]> = (0..120).map(|_| [rng.normal(), rng.normal()]).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + 0.8 * rng.normal() > 0.0)).collect();
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let schema = ClassifierId::Mlp.schema(2);
        let cfg = ClassifierConfig::default_for(ClassifierId::Mlp, 2)
            .with(&schema, "V", 20i64)
            .unwrap()
            .with(&schema, "H", "16")
            .unwrap();
        let m = crate::classifiers::fit(&cfg, &s).unwrap();
        assert!(m.as_mlp().unwrap().epochs() < 500, "ran {}", m.as_mlp().unwrap().epochs());
        let decayed = ClassifierConfig::default_for(ClassifierId::Mlp, 2)
            .with(&schema, "D", true)
            .unwrap();
        let d = crate::classifiers::fit(&decayed, &s).unwrap();
        assert_eq!(d.as_mlp().unwrap().epochs(), 500);
    }

    #[test]
    fn huge_learning_rate_is_reported_or_finite() {
        let s = separable();
        let schema = ClassifierId::Mlp.schema(2);
        let cfg = ClassifierConfig::default_for(ClassifierId::Mlp, 2)
            .with(&schema, "L", 1e6)
            .unwrap();
        match crate::classifiers::fit(&cfg, &s) {
            Ok(m) => assert!(m.as_mlp().unwrap().network().params().iter().all(|w| w.is_finite())),
            Err(e) => assert!(e.is_numerical()),
        }
    }
}
