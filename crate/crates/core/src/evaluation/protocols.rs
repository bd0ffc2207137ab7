use serde::{Deserialize, Serialize};

use super::{cross_val_accuracy, CvSettings, EvalStats};
use crate::classifiers::{ClassifierConfig, ClassifierId, Learner, ParamValue};
use crate::data::Samples;
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::par;

/// Identifies a dataset family by size and a content hash, so results from
/// different families are never mixed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyId {
    pub n_datasets: usize,
    pub fingerprint: String,
}

impl FamilyId {
    pub fn of(family: &[Samples]) -> FamilyId {
        // FNV-1a over feature bits and labels
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for d in family {
            eat(d.len() as u64);
            eat(d.n_features() as u64);
            for &x in d.features() {
                eat(x.to_bits());
            }
            for &y in d.labels() {
                eat(y as u64);
            }
        }
        FamilyId {
            n_datasets: family.len(),
            fingerprint: format!("{h:016x}"),
        }
    }
}

fn non_empty(family: &[Samples]) -> Result<()> {
    if family.is_empty() {
        Err(Error::Empty("dataset family"))
    } else {
        Ok(())
    }
}

/// Cross-validated accuracy of every config on every dataset,
/// `[config][dataset]`.
fn accuracy_grid<L: Learner + Sync>(configs: &[L], family: &[Samples], cv: &CvSettings) -> Result<Vec<Vec<f64>>> {
    let n = family.len();
    let flat = par::map_range(configs.len() * n, |t| cross_val_accuracy(&configs[t / n], &family[t % n], cv));
    let flat = flat.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(flat.chunks(n.max(1)).map(|c| c.to_vec()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub classifier: ClassifierId,
    pub config: ClassifierConfig,
    /// Per-dataset accuracy, in family order.
    pub accuracies: Vec<f64>,
    pub stats: EvalStats,
}

/// Every config on every dataset; entries sorted by mean accuracy,
/// descending (stable, so roster order breaks ties).
pub fn default_benchmark(family: &[Samples], configs: &[ClassifierConfig], cv: &CvSettings) -> Result<Vec<BenchEntry>> {
    non_empty(family)?;
    let grid = accuracy_grid(configs, family, cv)?;
    let mut out = configs
        .iter()
        .zip(grid)
        .map(|(c, acc)| {
            Ok(BenchEntry {
                classifier: c.classifier,
                config: c.clone(),
                stats: EvalStats::of(&acc)?,
                accuracies: acc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.stats.mean.total_cmp(&a.stats.mean));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub classifier: ClassifierId,
    /// Sweep label, e.g. `K` or `G:rbf`.
    pub parameter: String,
    pub base: ClassifierConfig,
    pub grid: Vec<ParamValue>,
    /// Γ_def per dataset.
    pub default_accuracy: Vec<f64>,
    /// `[dataset][grid value]`.
    pub grid_accuracy: Vec<Vec<f64>>,
    /// S = Γ_max - Γ_def per dataset.
    pub s: Vec<f64>,
    pub mean_s: f64,
    pub std_s: f64,
    pub max_s: f64,
}

/// One-dimensional sensitivity of `label` around `base`. The swept values
/// exclude the default, so S can be negative. `defaults` may supply Γ_def
/// already computed for `base` on this family.
pub fn sweep_parameter(
    base: &ClassifierConfig,
    label: &str,
    family: &[Samples],
    cv: &CvSettings,
    defaults: Option<&[f64]>,
) -> Result<SweepReport> {
    non_empty(family)?;
    let schema = base.classifier.schema(family[0].n_features());
    let target = schema.sweep_target(label)?;
    let spec = schema.get(&target.param)?;
    if spec.grid.is_empty() {
        return Err(Error::InvalidSpec(format!("{}.{} has an empty sweep grid", base.classifier, target.param)));
    }
    let mut context = base.clone();
    for (name, v) in &target.overrides {
        context.set(&schema, name, v.clone())?;
    }
    let configs = spec
        .grid
        .iter()
        .map(|v| context.clone().with(&schema, &target.param, v.clone()))
        .collect::<Result<Vec<_>>>()?;
    let default_accuracy = match defaults {
        Some(d) if d.len() == family.len() => d.to_vec(),
        Some(d) => return Err(Error::LengthMismatch { left: d.len(), right: family.len() }),
        None => accuracy_grid(std::slice::from_ref(base), family, cv)?.remove(0),
    };
    let by_config = accuracy_grid(&configs, family, cv)?;
    let grid_accuracy: Vec<Vec<f64>> = (0..family.len())
        .map(|d| by_config.iter().map(|c| c[d]).collect())
        .collect();
    let s: Vec<f64> = grid_accuracy
        .iter()
        .zip(&default_accuracy)
        .map(|(row, def)| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - def)
        .collect();
    let st = EvalStats::of(&s)?;
    Ok(SweepReport {
        classifier: base.classifier,
        parameter: target.label,
        base: base.clone(),
        grid: spec.grid.clone(),
        default_accuracy,
        grid_accuracy,
        mean_s: st.mean,
        std_s: st.deviation,
        max_s: st.best,
        s,
    })
}

/// Best configuration seen on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestTrial<C> {
    pub config: C,
    pub accuracy: f64,
    /// False when no random config beat the default.
    pub improved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub classifier: ClassifierId,
    pub family: FamilyId,
    pub n_configs: usize,
    pub seed: u64,
    pub default_accuracy: Vec<f64>,
    /// Random-config accuracy minus default, `[dataset][trial]`; `None`
    /// where training failed numerically.
    pub deltas: Vec<Vec<Option<f64>>>,
    /// Trials whose training failed numerically; they count as not beating
    /// the default.
    pub failed: usize,
    /// Percent of all trials that beat the default.
    pub p_value: f64,
    pub per_dataset_p: Vec<f64>,
    /// Improvement statistics over improving trials only.
    pub mean: f64,
    pub deviation: f64,
    pub maximum: f64,
    pub best: Vec<BestTrial<ClassifierConfig>>,
}

/// Outcome of the generic search core.
pub struct Trials<C> {
    pub default_accuracy: Vec<f64>,
    /// `[dataset][trial]` configs and accuracies; `None` marks a trial
    /// whose training failed numerically (divergence, non-convergence).
    pub trials: Vec<Vec<(C, Option<f64>)>>,
}

/// Evaluates `n_configs` configs per dataset. Trial `j` on dataset `d`
/// draws its config from a stream keyed by `(seed, d, j)`, so results do
/// not depend on scheduling.
pub fn search_trials<C, S>(
    family: &[Samples],
    default: &C,
    n_configs: usize,
    seed: u64,
    sample: S,
    cv: &CvSettings,
    defaults: Option<&[f64]>,
) -> Result<Trials<C>>
where
    C: Learner + Send + Sync,
    S: Fn(&mut Rng) -> C + Sync + Send,
{
    non_empty(family)?;
    if n_configs == 0 {
        return Err(Error::InvalidSpec("random search needs at least one config".into()));
    }
    let default_accuracy = match defaults {
        Some(d) if d.len() == family.len() => d.to_vec(),
        Some(d) => return Err(Error::LengthMismatch { left: d.len(), right: family.len() }),
        None => accuracy_grid(std::slice::from_ref(default), family, cv)?.remove(0),
    };
    let n = n_configs;
    let flat = par::map_range(family.len() * n, |t| {
        let (d, j) = (t / n, t % n);
        let mut rng = Rng::derive(seed, ((d as u64) << 32) | j as u64);
        let config = sample(&mut rng);
        match cross_val_accuracy(&config, &family[d], cv) {
            Ok(a) => Ok((config, Some(a))),
            Err(e) if e.is_numerical() => Ok((config, None)),
            Err(e) => Err(e),
        }
    });
    let mut flat = flat.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let trials = (0..family.len()).map(|_| flat.by_ref().take(n).collect()).collect();
    Ok(Trials {
        default_accuracy,
        trials,
    })
}

pub fn random_search(
    base: &ClassifierConfig,
    family: &[Samples],
    n_configs: usize,
    seed: u64,
    cv: &CvSettings,
    defaults: Option<&[f64]>,
) -> Result<SearchReport> {
    non_empty(family)?;
    let schema = base.classifier.schema(family[0].n_features());
    if !schema.is_tunable() {
        return Err(Error::InvalidSpec(format!("{} has no tunable parameters", base.classifier)));
    }
    let t = search_trials(family, base, n_configs, seed, |rng| schema.sample(rng), cv, defaults)?;
    let deltas: Vec<Vec<Option<f64>>> = t
        .trials
        .iter()
        .zip(&t.default_accuracy)
        .map(|(row, def)| row.iter().map(|(_, a)| a.map(|a| a - def)).collect())
        .collect();
    let failed = deltas.iter().flatten().filter(|d| d.is_none()).count();
    let improving: Vec<f64> = deltas.iter().flatten().flatten().cloned().filter(|&d| d > 0.0).collect();
    let total = (family.len() * n_configs) as f64;
    let per_dataset_p = deltas
        .iter()
        .map(|row| 100.0 * row.iter().flatten().filter(|&&d| d > 0.0).count() as f64 / n_configs as f64)
        .collect();
    let (mean, deviation, maximum) = match EvalStats::of(&improving) {
        Ok(s) => (s.mean, s.deviation, s.best),
        Err(_) => (0.0, 0.0, 0.0),
    };
    let best = t
        .trials
        .iter()
        .zip(&t.default_accuracy)
        .map(|(row, &def)| {
            let mut best = BestTrial {
                config: base.clone(),
                accuracy: def,
                improved: false,
            };
            for (c, a) in row {
                let Some(a) = a else { continue };
                if *a > best.accuracy {
                    best = BestTrial {
                        config: c.clone(),
                        accuracy: *a,
                        improved: true,
                    };
                }
            }
            best
        })
        .collect();
    Ok(SearchReport {
        classifier: base.classifier,
        family: FamilyId::of(family),
        n_configs,
        seed,
        default_accuracy: t.default_accuracy,
        failed,
        p_value: 100.0 * improving.len() as f64 / total,
        per_dataset_p,
        mean,
        deviation,
        maximum,
        best,
        deltas,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub classifier: ClassifierId,
    /// Mean and deviation over datasets of the best accuracy found (the
    /// default counts as a candidate).
    pub mean: f64,
    pub deviation: f64,
}

pub fn best_of_random_ranking(reports: &[SearchReport]) -> Result<Vec<RankEntry>> {
    let first = reports.first().ok_or(Error::Empty("search reports"))?;
    if let Some(r) = reports.iter().find(|r| r.family != first.family) {
        return Err(Error::Mismatch(format!(
            "{} was searched on family {} but {} on {}",
            r.classifier, r.family.fingerprint, first.classifier, first.family.fingerprint
        )));
    }
    let mut out = reports
        .iter()
        .map(|r| {
            let acc: Vec<f64> = r.best.iter().map(|b| b.accuracy).collect();
            let s = EvalStats::of(&acc)?;
            Ok(RankEntry {
                rank: 0,
                classifier: r.classifier,
                mean: s.mean,
                deviation: s.deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    for (i, e) in out.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub features: usize,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub classifier: ClassifierId,
    pub points: Vec<CurvePoint>,
}

/// Mean default accuracy per classifier as the feature count grows.
/// `families` are `(feature count, datasets)` in ascending feature order;
/// `classifiers` supplies the configs (resolved per feature count).
pub fn feature_curve(
    families: &[(usize, Vec<Samples>)],
    classifiers: &[ClassifierId],
    cv: &CvSettings,
) -> Result<Vec<CurveSeries>> {
    if families.is_empty() {
        return Err(Error::Empty("feature-curve families"));
    }
    if families.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidSpec("feature-curve families must have ascending feature counts".into()));
    }
    let mut series: Vec<CurveSeries> = classifiers
        .iter()
        .map(|&c| CurveSeries {
            classifier: c,
            points: Vec::new(),
        })
        .collect();
    for (f, family) in families {
        if family.is_empty() {
            return Err(Error::Empty("feature-curve family"));
        }
        let configs: Vec<ClassifierConfig> = classifiers.iter().map(|&c| ClassifierConfig::default_for(c, *f)).collect();
        let grid = accuracy_grid(&configs, family, cv)?;
        for (s, acc) in series.iter_mut().zip(grid) {
            s.points.push(CurvePoint {
                features: *f,
                mean_accuracy: EvalStats::of(&acc)?.mean,
            });
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Predict;

    /// Learner that always predicts its configured class, so its pooled
    /// accuracy is that class's share of the dataset.
    #[derive(Clone, Debug)]
    struct Dummy {
        bias: usize,
    }
    struct DummyModel(usize);
    impl Predict for DummyModel {
        fn predict(&self, _: &[f64]) -> Result<usize> {
            Ok(self.0)
        }
    }
    impl Learner for Dummy {
        type Model = DummyModel;
        fn fit(&self, _: &Samples) -> Result<DummyModel> {
            Ok(DummyModel(self.bias))
        }
    }

    fn skewed(d: usize) -> Samples {
        // class c has 10 + 10c + d instances, so predicting class c scores
        // its share exactly
        let mut labels = Vec::new();
        for c in 0..3 {
            labels.extend(std::iter::repeat_n(c, 10 + 10 * c + d));
        }
        let rows: Vec<[f64; 1]> = labels.iter().map(|_| [0.0]).collect();
        Samples::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn p_value_matches_brute_force_count() {
        let family = vec![skewed(0), skewed(5)];
        let cv = CvSettings { folds: 5, seed: 2 };
        let default = Dummy { bias: 1 };
        let sample = |rng: &mut Rng| Dummy { bias: rng.below(3) };
        let t = search_trials(&family, &default, 3, 11, sample, &cv, None).unwrap();
        // oracle: replay the keyed streams and score analytically
        let mut beats = 0;
        for (d, data) in family.iter().enumerate() {
            let share = |c: usize| 100.0 * data.class_counts()[c] as f64 / data.len() as f64;
            assert_eq!(t.default_accuracy[d], share(1));
            for j in 0..3 {
                let mut rng = Rng::derive(11, ((d as u64) << 32) | j as u64);
                let c = rng.below(3);
                assert_eq!(t.trials[d][j].1, Some(share(c)));
                if share(c) > share(1) {
                    beats += 1;
                }
            }
        }
        let counted = t
            .trials
            .iter()
            .zip(&t.default_accuracy)
            .flat_map(|(row, def)| row.iter().map(move |(_, a)| a.unwrap() > *def))
            .filter(|&b| b)
            .count();
        assert_eq!(counted, beats);
    }

    fn tiny_family() -> Vec<Samples> {
        let spec = crate::datagen::GeneratorSpec {
            n_features: 2,
            n_classes: 3,
            per_class: 10,
            n_datasets: 2,
            seed: 4,
            ..Default::default()
        };
        crate::datagen::gen_family(&spec).unwrap().into_iter().map(|d| d.samples).collect()
    }

    #[test]
    fn inert_sweep_is_exactly_zero() {
        let family = tiny_family();
        let cv = CvSettings { folds: 5, seed: 1 };
        let base = ClassifierConfig::default_for(ClassifierId::Mlp, 2)
            .with(&ClassifierId::Mlp.schema(2), "N", 20i64)
            .unwrap();
        let r = sweep_parameter(&base, "C", &family, &cv, None).unwrap();
        assert_eq!((r.mean_s, r.std_s, r.max_s), (0.0, 0.0, 0.0));
        let knn = ClassifierConfig::default_for(ClassifierId::Knn, 2);
        let r = sweep_parameter(&knn, "I", &family, &cv, None).unwrap();
        assert!(r.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn search_report_is_self_consistent() {
        let family = tiny_family();
        let cv = CvSettings { folds: 5, seed: 1 };
        let base = ClassifierConfig::default_for(ClassifierId::Knn, 2);
        let r = random_search(&base, &family, 6, 3, &cv, None).unwrap();
        let improving = r.deltas.iter().flatten().flatten().filter(|&&d| d > 0.0).count();
        assert_eq!(r.failed, 0);
        assert_eq!(r.p_value, 100.0 * improving as f64 / 12.0);
        assert!(r.maximum >= r.mean && r.mean >= 0.0);
        for (b, def) in r.best.iter().zip(&r.default_accuracy) {
            assert!(b.accuracy >= *def);
        }
        let ranking = best_of_random_ranking(std::slice::from_ref(&r)).unwrap();
        assert_eq!(ranking[0].rank, 1);
        let other = random_search(&base, &family[..1], 2, 3, &cv, None).unwrap();
        assert!(best_of_random_ranking(&[r, other]).is_err());
        assert!(random_search(&base, &family, 0, 3, &cv, None).is_err());
    }
}
