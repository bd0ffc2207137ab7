//! Support vector machine: one-vs-one binary machines trained by SMO,
//! combined by pairwise vote.

mod kernel;
mod smo;

pub use kernel::{kernel_eval, Kernel};
pub use smo::Solution;

use super::{ClassifierConfig, FeatureScaler, ParamSpec, RandomRange};
use crate::data::Samples;
use crate::error::Result;
use crate::numeric::Rng;

pub(crate) fn schema() -> Vec<ParamSpec> {
    let decades = |lo: i32, hi: i32| (lo..=hi).map(|e| 10f64.powi(e));
    vec![
        ParamSpec::real("C", 1.0, "complexity (box bound on the dual variables)")
            .grid_reals(decades(-3, 3).filter(|&c| c != 1.0))
            // random draws stay at or above the default; C < 1 mostly underfits
            .range(RandomRange::RealLog { lo: 1.0, hi: 1e3 })
            .bounds(1e-12, f64::INFINITY),
        ParamSpec::real("L", 1e-3, "KKT tolerance")
            .grid_reals([1e-4, 1e-2, 1e-1])
            .range(RandomRange::RealLog { lo: 1e-4, hi: 1e-1 })
            .bounds(1e-15, 1.0),
        ParamSpec::real("P", 1e-12, "round-off margin at the box bounds")
            .grid_reals([1e-14, 1e-10, 1e-8])
            .range(RandomRange::RealLog { lo: 1e-14, hi: 1e-8 })
            .bounds(0.0, 1e-3),
        ParamSpec::choice("N", "normalize", &["normalize", "standardize", "none"], "feature preprocessing"),
        ParamSpec::flag("V", "calibrate outputs with logistic models (accepted, no effect)").inert(),
        ParamSpec::int("W", 1, "seed for the training order")
            .grid_ints(2..=11)
            .range(RandomRange::IntLinear { lo: 1, hi: 1000 }),
        ParamSpec::choice("kernel", "poly", &["poly", "normpoly", "rbf", "puk"], "kernel family"),
        ParamSpec::int("E", 1, "polynomial exponent")
            .grid_ints([2, 3, 4, 5])
            .range(RandomRange::IntLinear { lo: 1, hi: 5 })
            .bounds(1.0, 20.0)
            .active_when("kernel", &["poly", "normpoly"]),
        ParamSpec::real("G", 0.01, "RBF gamma")
            .grid_reals([0.001, 0.01, 0.1, 1.0, 10.0])
            .range(RandomRange::RealLog { lo: 1e-2, hi: 1.0 })
            .bounds(1e-12, f64::INFINITY)
            .active_when("kernel", &["rbf"]),
        ParamSpec::real("S", 1.0, "Puk width sigma")
            .grid_reals([0.1, 0.5, 2.0, 5.0, 10.0])
            .range(RandomRange::RealLog { lo: 0.1, hi: 10.0 })
            .bounds(1e-12, f64::INFINITY)
            .active_when("kernel", &["puk"]),
    ]
}

/// Shape parameter of the Puk kernel.
pub const PUK_OMEGA: f64 = 1.0;

pub(crate) fn kernel_from(cfg: &ClassifierConfig) -> Result<Kernel> {
    Ok(match cfg.choice("kernel")?.as_str() {
        "poly" => Kernel::Poly {
            exponent: cfg.int("E")? as i32,
        },
        "normpoly" => Kernel::NormPoly {
            exponent: cfg.int("E")? as i32,
        },
        "rbf" => Kernel::Rbf { gamma: cfg.real("G")? },
        _ => Kernel::Puk {
            sigma: cfg.real("S")?,
            omega: PUK_OMEGA,
        },
    })
}

/// Worst constraint residuals of a trained binary machine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualReport {
    /// Largest excursion of any alpha outside `[0, C]`.
    pub box_violation: f64,
    /// `|sum_i alpha_i y_i|`.
    pub equality_residual: f64,
    /// Largest KKT violation over the training points, in margin units.
    pub kkt_violation: f64,
}

#[derive(Clone, Debug)]
pub struct BinaryMachine {
    /// Class predicted for a positive decision value.
    pub positive: usize,
    pub negative: usize,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    rho: f64,
    c: f64,
    support: Vec<usize>,
}

impl BinaryMachine {
    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        let s: f64 = self
            .support
            .iter()
            .map(|&i| self.alpha[i] * self.y[i] * kernel.eval(&self.x[i], x))
            .sum();
        s - self.rho
    }

    /// Re-checks the dual constraints and KKT conditions from scratch.
    pub fn dual_report(&self, kernel: &Kernel, epsilon: f64) -> DualReport {
        let box_violation = self
            .alpha
            .iter()
            .map(|&a| (-a).max(a - self.c).max(0.0))
            .fold(0.0, f64::max);
        let equality_residual = self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum::<f64>().abs();
        let mut kkt: f64 = 0.0;
        for (i, x) in self.x.iter().enumerate() {
            let m = self.y[i] * self.decision(kernel, x);
            let a = self.alpha[i];
            let v = if a <= epsilon {
                (1.0 - m).max(0.0)
            } else if a >= self.c - epsilon {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            kkt = kkt.max(v);
        }
        DualReport {
            box_violation,
            equality_residual,
            kkt_violation: kkt,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SvmModel {
    scaler: FeatureScaler,
    kernel: Kernel,
    epsilon: f64,
    n_classes: usize,
    machines: Vec<BinaryMachine>,
}

impl SvmModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn machines(&self) -> &[BinaryMachine] {
        &self.machines
    }

    pub fn dual_reports(&self) -> Vec<DualReport> {
        self.machines.iter().map(|m| m.dual_report(&self.kernel, self.epsilon)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let z = self.scaler.apply(x);
        let mut votes = vec![0usize; self.n_classes];
        for m in &self.machines {
            let winner = if m.decision(&self.kernel, &z) > 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        best
    }
}

pub(crate) fn fit(cfg: &ClassifierConfig, train: &Samples) -> Result<SvmModel> {
    let c = cfg.real("C")?;
    let tolerance = cfg.real("L")?;
    let epsilon = cfg.real("P")?;
    let seed = cfg.int("W")? as u64;
    let kernel = kernel_from(cfg)?;
    let scaler = match cfg.choice("N")?.as_str() {
        "normalize" => FeatureScaler::min_max(train, 0.0, 1.0),
        "standardize" => FeatureScaler::standardize(train),
        _ => FeatureScaler::identity(train.n_features()),
    };
    let data = scaler.transform(train);
    let mut order: Vec<usize> = (0..data.len()).collect();
    if seed != 1 {
        Rng::new(seed).shuffle(&mut order);
    }
    let k = data.n_classes();
    let counts = data.class_counts();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
        .filter(|&(a, b)| counts[a] > 0 && counts[b] > 0)
        .collect();
    let machines = crate::par::map_slice(&pairs, |&(a, b)| {
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| data.label(i) == a || data.label(i) == b)
            .collect();
        let rows: Vec<&[f64]> = members.iter().map(|&i| data.row(i)).collect();
        let y: Vec<f64> = members.iter().map(|&i| if data.label(i) == a { 1.0 } else { -1.0 }).collect();
        let problem = smo::Problem {
            x: &rows,
            y: &y,
            c,
            kernel,
            tolerance,
            epsilon,
        };
        smo::solve(&problem).map(|sol| {
            let support = (0..sol.alpha.len()).filter(|&i| sol.alpha[i] > epsilon).collect();
            BinaryMachine {
                positive: a,
                negative: b,
                x: rows.iter().map(|r| r.to_vec()).collect(),
                y,
                alpha: sol.alpha,
                rho: sol.rho,
                c,
                support,
            }
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        scaler,
        kernel,
        epsilon,
        n_classes: k,
        machines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierId, ParamValue, Predict};

    fn config(pairs: &[(&str, ParamValue)], n_features: usize) -> ClassifierConfig {
        let schema = ClassifierId::Svm.schema(n_features);
        let mut cfg = ClassifierConfig::default_for(ClassifierId::Svm, n_features);
        for (k, v) in pairs {
            cfg.set(&schema, k, v.clone()).unwrap();
        }
        cfg
    }

    #[test]
    fn separable_linear_machine_satisfies_kkt() {
        let mut rng = Rng::new(21);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < 60 {
            let p = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            let s = p[0] + 0.5 * p[1];
            if s.abs() > 0.2 {
                rows.push(p);
                labels.push(usize::from(s > 0.0));
            }
        }
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let model = crate::classifiers::fit(&config(&[], 2), &s).unwrap();
        for (r, y) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(r).unwrap(), *y);
        }
        let svm = model.as_svm().unwrap();
        for rep in svm.dual_reports() {
            assert!(rep.box_violation <= 1e-9);
            assert!(rep.equality_residual <= 1e-9);
            assert!(rep.kkt_violation <= 1e-3, "{rep:?}");
        }
    }

    #[test]
    fn rbf_separates_xor() {
        let rows = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let labels = [0, 0, 1, 1];
        let s = Samples::from_rows(&rows, &labels).unwrap();
        let cfg = config(&[("kernel", "rbf".into()), ("G", 1.0.into()), ("C", 10.0.into())], 2);
        let model = crate::classifiers::fit(&cfg, &s).unwrap();
        let svm = model.as_svm().unwrap();
        let m = &svm.machines()[0];
        for (r, y) in rows.iter().zip(&labels) {
            // direct evaluation of the decision function
            let f = m.decision(svm.kernel(), r);
            assert_eq!(usize::from(f <= 0.0), *y, "f = {f}");
        }
    }

    #[test]
    fn every_kernel_and_scaling_is_feasible_on_three_classes() {
        let mut rng = Rng::new(5);
        let rows: Vec<[f64; 3]> = (0..90).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0) + usize::from(r[1] > 0.5)).collect();
        let s = Samples::from_rows(&rows, &labels).unwrap();
        for kernel in ["poly", "normpoly", "rbf", "puk"] {
            for scaling in ["normalize", "standardize", "none"] {
                for c in [0.01, 1.0, 100.0] {
                    let cfg = config(
                        &[("kernel", kernel.into()), ("N", scaling.into()), ("C", c.into()), ("E", 2i64.into())],
                        3,
                    );
                    let model = crate::classifiers::fit(&cfg, &s).unwrap();
                    let svm = model.as_svm().unwrap();
                    assert_eq!(svm.machines().len(), 3);
                    for rep in svm.dual_reports() {
                        assert!(rep.box_violation <= 1e-9, "{kernel} {scaling} {c}: {rep:?}");
                        assert!(rep.equality_residual <= 1e-9, "{kernel} {scaling} {c}: {rep:?}");
                        assert!(rep.kkt_violation <= 1e-3 + 1e-9, "{kernel} {scaling} {c}: {rep:?}");
                    }
                }
            }
        }
    }
}
