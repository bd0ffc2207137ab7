//! Naive Bayes with Gaussian, kernel-density or equal-frequency-bin
//! per-feature likelihoods.

use std::f64::consts::PI;

use super::{argmax, softmax_in_place, ClassifierConfig, ParamSpec};
use crate::data::Samples;
use crate::error::Result;

pub const VARIANCE_FLOOR: f64 = 1e-9;
pub const N_BINS: usize = 10;
const MIN_BANDWIDTH: f64 = 1e-3;

pub(crate) fn schema() -> Vec<ParamSpec> {
    vec![
        ParamSpec::flag("K", "kernel density estimate per feature"),
        ParamSpec::flag("D", "discretize features into equal-frequency bins"),
    ]
}

#[derive(Clone, Debug)]
enum Likelihood {
    Gaussian {
        /// `[class][feature]`
        mean: Vec<Vec<f64>>,
        var: Vec<Vec<f64>>,
    },
    Kernel {
        /// `[class][feature]` training values and bandwidths
        values: Vec<Vec<Vec<f64>>>,
        bandwidth: Vec<Vec<f64>>,
    },
    Discrete {
        /// `[feature]` ascending cut points
        cuts: Vec<Vec<f64>>,
        /// `[class][feature][bin]` log probabilities
        log_p: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug)]
pub struct NaiveBayesModel {
    log_prior: Vec<f64>,
    present: Vec<bool>,
    likelihood: Likelihood,
}

fn gaussian_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c < x)
}

impl NaiveBayesModel {
    fn log_likelihood(&self, class: usize, x: &[f64]) -> f64 {
        match &self.likelihood {
            Likelihood::Gaussian { mean, var } => x
                .iter()
                .enumerate()
                .map(|(j, &v)| gaussian_log_pdf(v, mean[class][j], var[class][j]))
                .sum(),
            Likelihood::Kernel { values, bandwidth } => x
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let h = bandwidth[class][j];
                    let pts = &values[class][j];
                    log_sum_exp(pts.iter().map(|&p| gaussian_log_pdf(v, p, h * h)))
                        - (pts.len() as f64).ln()
                })
                .sum(),
            Likelihood::Discrete { cuts, log_p } => x
                .iter()
                .enumerate()
                .map(|(j, &v)| log_p[class][j][bin_of(&cuts[j], v)])
                .sum(),
        }
    }

    /// Class posterior; classes absent from training get probability 0.
    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut scores: Vec<f64> = (0..self.log_prior.len())
            .map(|c| {
                if self.present[c] {
                    self.log_prior[c] + self.log_likelihood(c, x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        softmax_in_place(&mut scores);
        scores
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.posterior(x))
    }
}

/// Cut points of `N_BINS` equal-frequency bins; duplicates removed.
fn equal_frequency_cuts(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut cuts: Vec<f64> = (1..N_BINS)
        .map(|b| {
            let pos = b * n / N_BINS;
            if pos == 0 {
                values[0]
            } else {
                0.5 * (values[pos - 1] + values[pos.min(n - 1)])
            }
        })
        .collect();
    cuts.dedup();
    cuts
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<NaiveBayesModel> {
    let n_classes = train.n_classes();
    let f = train.n_features();
    let counts = train.class_counts();
    let n = train.len() as f64;
    // Laplace-smoothed priors
    let log_prior = counts
        .iter()
        .map(|&c| ((c as f64 + 1.0) / (n + n_classes as f64)).ln())
        .collect();
    let present = counts.iter().map(|&c| c > 0).collect();

    let mut by_class: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); f]; n_classes];
    for i in 0..train.len() {
        let c = train.label(i);
        for (j, &v) in train.row(i).iter().enumerate() {
            by_class[c][j].push(v);
        }
    }

    let likelihood = if cfg.flag("D")? {
        let cuts: Vec<Vec<f64>> = (0..f)
            .map(|j| equal_frequency_cuts((0..train.len()).map(|i| train.value(i, j)).collect()))
            .collect();
        let log_p = by_class
            .iter()
            .map(|feats| {
                feats
                    .iter()
                    .enumerate()
                    .map(|(j, vals)| {
                        let bins = cuts[j].len() + 1;
                        let mut hist = vec![0usize; bins];
                        for &v in vals {
                            hist[bin_of(&cuts[j], v)] += 1;
                        }
                        let total = (vals.len() + bins) as f64;
                        hist.iter().map(|&h| ((h + 1) as f64 / total).ln()).collect()
                    })
                    .collect()
            })
            .collect();
        Likelihood::Discrete { cuts, log_p }
    } else if cfg.flag("K")? {
        let bandwidth = by_class
            .iter()
            .map(|feats| {
                feats
                    .iter()
                    .map(|vals| {
                        if vals.is_empty() {
                            return MIN_BANDWIDTH;
                        }
                        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        ((hi - lo) / (vals.len() as f64).sqrt()).max(MIN_BANDWIDTH)
                    })
                    .collect()
            })
            .collect();
        Likelihood::Kernel {
            values: by_class,
            bandwidth,
        }
    } else {
        let mut mean = vec![vec![0.0; f]; n_classes];
        let mut var = vec![vec![VARIANCE_FLOOR; f]; n_classes];
        for c in 0..n_classes {
            for j in 0..f {
                let vals = &by_class[c][j];
                if vals.is_empty() {
                    continue;
                }
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let v = if vals.len() > 1 {
                    vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
                } else {
                    0.0
                };
                mean[c][j] = m;
                var[c][j] = v.max(VARIANCE_FLOOR);
            }
        }
        Likelihood::Gaussian { mean, var }
    };
    Ok(NaiveBayesModel {
        log_prior,
        present,
        likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierId;

    fn config(kernel: bool, discrete: bool) -> ClassifierConfig {
        let schema = ClassifierId::NaiveBayes.schema(1);
        schema
            .default_config()
            .with(&schema, "K", kernel)
            .unwrap()
            .with(&schema, "D", discrete)
            .unwrap()
    }

    #[test]
    fn mirrored_classes_split_evenly_at_the_symmetry_point() {
        let s = Samples::from_rows(&[[-1.0], [-2.0], [-3.5], [1.0], [2.0], [3.5]], &[0, 0, 0, 1, 1, 1])
            .unwrap();
        for (k, d) in [(false, false), (true, false), (false, true)] {
            let m = fit(&config(k, d), &s).unwrap();
            if !d {
                let p = m.posterior(&[0.0]);
                assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12, "{k} {d}: {p:?}");
            }
            // mirror images get mirrored posteriors; 0 itself is a bin cut
            for x in [0.7, 1.0, 2.5, 5.0] {
                let (a, b) = (m.posterior(&[-x]), m.posterior(&[x]));
                assert!((a[0] - b[1]).abs() < 1e-12, "{k} {d} at {x}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn floored_variance_matches_hand_densities() {
        let s = Samples::from_rows(&[[0.0], [0.0], [2.0], [2.0]], &[0, 0, 1, 1]).unwrap();
        let m = fit(&config(false, false), &s).unwrap();
        let p = m.posterior(&[0.5]);
        // equal priors; N(0.5; 0, 1e-9) / N(0.5; 2, 1e-9) = exp((1.5² - 0.5²) / 2e-9)
        let log_ratio: f64 = (1.5f64.powi(2) - 0.5f64.powi(2)) / (2.0 * VARIANCE_FLOOR);
        let expected_b = 1.0 / (1.0 + log_ratio.exp());
        assert!((p[1] - expected_b).abs() <= 1e-9);
        assert!((p[0] - (1.0 - expected_b)).abs() <= 1e-9);
        assert!(p.iter().all(|v| v.is_finite()));

        // non-degenerate hand case: class A {0, 2}, class B {4, 6}; var = 2 each
        let s = Samples::from_rows(&[[0.0], [2.0], [4.0], [6.0]], &[0, 0, 1, 1]).unwrap();
        let p = fit(&config(false, false), &s).unwrap().posterior(&[2.5]);
        let pdf = |x: f64, mu: f64| (-(x - mu).powi(2) / 4.0).exp() / (4.0 * PI).sqrt();
        let (a, b) = (pdf(2.5, 1.0), pdf(2.5, 5.0));
        assert!((p[0] - a / (a + b)).abs() <= 1e-9);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [(i % 7) as f64, (i * i % 11) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let s = Samples::from_rows(&rows, &labels).unwrap();
        for (k, d) in [(false, false), (true, false), (false, true)] {
            let m = fit(&config(k, d), &s).unwrap();
            for x in [[0.0, 0.0], [3.3, 100.0], [-50.0, 5.0]] {
                let p = m.posterior(&x);
                assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn cuts_clamp_out_of_range_values() {
        let cuts = equal_frequency_cuts((0..100).map(|i| i as f64).collect());
        assert_eq!(cuts.len(), 9);
        assert_eq!(bin_of(&cuts, -1e9), 0);
        assert_eq!(bin_of(&cuts, 1e9), 9);
    }
}
