use std::fs;
use std::path::{Path, PathBuf};

use clfbench::classifiers::{schema_registry, ClassifierConfig, ClassifierId};
use clfbench::datagen::{gen_family, load_family, save_family, GeneratorSpec};
use clfbench::evaluation::{
    best_of_random_ranking, default_benchmark, random_search, sweep_parameter, BenchEntry, CurvePoint, CurveSeries,
    FamilyId, RankEntry, SearchReport, SweepReport,
};
use clfbench::report::{self, Format, Table};
use clfbench::{par, CvSettings, Error, Samples};
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command, CommonArgs, GeneratorArgs};
use crate::run_config::{Protocol, RunConfig};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Protocol output as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Bench {
        family: FamilyId,
        entries: Vec<BenchEntry>,
    },
    Sweep {
        family: FamilyId,
        reports: Vec<SweepReport>,
    },
    Search {
        family: FamilyId,
        reports: Vec<SearchReport>,
        ranking: Vec<RankEntry>,
    },
    Curve {
        series: Vec<CurveSeries>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub run_config: RunConfig,
    pub results: Results,
}

fn generator_specs(g: &GeneratorArgs) -> Vec<GeneratorSpec> {
    g.features
        .iter()
        .map(|&f| GeneratorSpec {
            n_classes: g.classes,
            n_features: f,
            per_class: g.per_class,
            alpha: g.alpha,
            n_datasets: g.count,
            seed: g.seed,
            full_rank: g.full_rank,
            ..GeneratorSpec::default()
        })
        .collect()
}

fn common_config(protocol: Protocol, c: CommonArgs) -> Result<RunConfig> {
    let classifiers = c
        .classifiers
        .iter()
        .map(|s| s.parse::<ClassifierId>())
        .collect::<clfbench::Result<Vec<_>>>()?;
    Ok(RunConfig {
        protocol,
        seed: c.generator.seed,
        generators: if c.data.is_empty() { generator_specs(&c.generator) } else { Vec::new() },
        data: c.data,
        classifiers,
        overrides: c.overrides,
        cv: CvSettings {
            folds: c.folds,
            seed: c.cv_seed,
        },
        out: c.out,
    })
}

fn run_config(command: Command) -> Result<RunConfig> {
    let rc = match command {
        Command::Gen { generator, out } => RunConfig {
            protocol: Protocol::Gen,
            seed: generator.seed,
            generators: generator_specs(&generator),
            data: Vec::new(),
            classifiers: Vec::new(),
            overrides: Vec::new(),
            cv: CvSettings::default(),
            out: Some(out),
        },
        Command::Bench { common } => common_config(Protocol::Bench, common)?,
        Command::Sweep { common, params } => common_config(Protocol::Sweep { parameters: params }, common)?,
        Command::Search { common, configs } => common_config(Protocol::Search { n_configs: configs }, common)?,
        Command::Curve { common } => common_config(Protocol::Curve, common)?,
        Command::Report {
            input,
            format,
            table,
            histograms,
            bins,
            out,
            seed,
        } => RunConfig {
            protocol: Protocol::Report {
                input,
                format,
                table,
                histograms,
                bins,
            },
            seed,
            generators: Vec::new(),
            data: Vec::new(),
            classifiers: Vec::new(),
            overrides: Vec::new(),
            cv: CvSettings::default(),
            out,
        },
        Command::Schemas { features, out, seed } => RunConfig {
            protocol: Protocol::Schemas { features },
            seed,
            generators: Vec::new(),
            data: Vec::new(),
            classifiers: Vec::new(),
            overrides: Vec::new(),
            cv: CvSettings::default(),
            out,
        },
    };
    Ok(rc)
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut rc = run_config(cli.command)?;
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        rc = rc.overlay(value)?;
    }
    par::with_jobs(cli.jobs, || dispatch(&rc))
}

fn dispatch(rc: &RunConfig) -> Result<()> {
    match &rc.protocol {
        Protocol::Gen => gen(rc),
        Protocol::Bench => bench(rc),
        Protocol::Sweep { parameters } => sweep(rc, parameters),
        Protocol::Search { n_configs } => search(rc, *n_configs),
        Protocol::Curve => curve(rc),
        Protocol::Report {
            input,
            format,
            table,
            histograms,
            bins,
        } => render(rc, input, format, table.as_deref(), histograms.as_deref(), *bins),
        Protocol::Schemas { features } => {
            let doc = serde_json::json!({ "run_config": rc, "schemas": schema_registry(*features) });
            emit(rc.out.as_deref(), &pretty(&doc))
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

fn compact_config(rc: &RunConfig) -> String {
    serde_json::to_string(rc).expect("run config serializes")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes to `out`, or standard output when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            fs::write(p, text).map_err(|e| io_err(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(rc: &RunConfig) -> Result<()> {
    let out = rc.out.as_deref().ok_or_else(|| CliError::Usage("gen needs --out".into()))?;
    let [spec] = rc.generators.as_slice() else {
        return Err(CliError::Usage("gen writes exactly one family; give a single --features".into()));
    };
    eprintln!("generating {} datasets with {} features", spec.n_datasets, spec.n_features);
    let family = gen_family(spec)?;
    save_family(&family, out)?;
    let path = out.join("run_config.json");
    fs::write(&path, pretty(rc)).map_err(|e| io_err(&path, e))
}

/// Every family named by the run, in the order given.
fn families(rc: &RunConfig) -> Result<Vec<Vec<Samples>>> {
    let mut out = Vec::new();
    for dir in &rc.data {
        eprintln!("loading {}", dir.display());
        out.push(load_family(dir)?.into_iter().map(|d| d.samples).collect());
    }
    for spec in &rc.generators {
        eprintln!("generating {} datasets with {} features", spec.n_datasets, spec.n_features);
        out.push(gen_family(spec)?.into_iter().map(|d| d.samples).collect());
    }
    if out.is_empty() {
        return Err(CliError::Usage("no family: give --data or generator flags".into()));
    }
    Ok(out)
}

fn single_family(rc: &RunConfig) -> Result<Vec<Samples>> {
    let mut all = families(rc)?;
    if all.len() != 1 {
        return Err(CliError::Usage(format!(
            "{} takes exactly one family, got {}",
            rc.protocol.name(),
            all.len()
        )));
    }
    let family = all.remove(0);
    if family.is_empty() {
        return Err(CliError::Core(Error::Empty("dataset family")));
    }
    Ok(family)
}

fn selected(rc: &RunConfig) -> Vec<ClassifierId> {
    if rc.classifiers.is_empty() {
        ClassifierId::ALL.to_vec()
    } else {
        rc.classifiers.clone()
    }
}

/// Parses `svm.C=10` into `(svm, "C", "10")`.
fn parse_override(text: &str) -> Result<(ClassifierId, &str, &str)> {
    let bad = || CliError::Usage(format!("override `{text}` is not of the form classifier.param=value"));
    let (lhs, value) = text.split_once('=').ok_or_else(bad)?;
    let (clf, param) = lhs.split_once('.').ok_or_else(bad)?;
    if param.is_empty() || value.is_empty() {
        return Err(bad());
    }
    Ok((clf.parse()?, param, value))
}

/// Default configs with the run's overrides applied, for `n_features`.
fn configs(rc: &RunConfig, n_features: usize) -> Result<Vec<ClassifierConfig>> {
    let ids = selected(rc);
    let mut out: Vec<ClassifierConfig> = ids
        .iter()
        .map(|&id| ClassifierConfig::default_for(id, n_features))
        .collect();
    for text in &rc.overrides {
        let (id, param, value) = parse_override(text)?;
        let Some(cfg) = out.iter_mut().find(|c| c.classifier == id) else {
            return Err(CliError::Usage(format!("override `{text}` names {id}, which is not selected")));
        };
        let schema = id.schema(n_features);
        let v = schema.get(param)?.parse(id, value)?;
        cfg.set(&schema, param, v)?;
    }
    Ok(out)
}

fn write_results(rc: &RunConfig, results: Results) -> Result<()> {
    let env = Envelope {
        run_config: rc.clone(),
        results,
    };
    emit(rc.out.as_deref(), &pretty(&env))
}

fn bench(rc: &RunConfig) -> Result<()> {
    let family = single_family(rc)?;
    let configs = configs(rc, family[0].n_features())?;
    eprintln!("benchmarking {} classifiers on {} datasets", configs.len(), family.len());
    let entries = default_benchmark(&family, &configs, &rc.cv)?;
    write_results(
        rc,
        Results::Bench {
            family: FamilyId::of(&family),
            entries,
        },
    )
}

fn sweep(rc: &RunConfig, parameters: &[String]) -> Result<()> {
    let family = single_family(rc)?;
    let f = family[0].n_features();
    let configs = configs(rc, f)?;
    let mut targets: Vec<(ClassifierId, String)> = Vec::new();
    if parameters.is_empty() {
        for c in &configs {
            let schema = c.classifier.schema(f);
            for t in schema.sweep_targets() {
                if !schema.get(&t.param)?.grid.is_empty() {
                    targets.push((c.classifier, t.label));
                }
            }
        }
    } else {
        for p in parameters {
            let (clf, label) = p
                .split_once('.')
                .ok_or_else(|| CliError::Usage(format!("sweep target `{p}` is not of the form classifier.param")))?;
            targets.push((clf.parse()?, label.to_string()));
        }
    }
    let mut reports = Vec::new();
    let mut defaults: Vec<(ClassifierId, Vec<f64>)> = Vec::new();
    for (id, label) in &targets {
        let base = configs
            .iter()
            .find(|c| c.classifier == *id)
            .ok_or_else(|| CliError::Usage(format!("sweep target {id}.{label} names an unselected classifier")))?;
        if !defaults.iter().any(|(d, _)| d == id) {
            let entry = default_benchmark(&family, std::slice::from_ref(base), &rc.cv)?.remove(0);
            defaults.push((*id, entry.accuracies));
        }
        let def = &defaults.iter().find(|(d, _)| d == id).expect("just inserted").1;
        eprintln!("sweeping {id}.{label}");
        reports.push(sweep_parameter(base, label, &family, &rc.cv, Some(def))?);
    }
    write_results(
        rc,
        Results::Sweep {
            family: FamilyId::of(&family),
            reports,
        },
    )
}

fn search(rc: &RunConfig, n_configs: usize) -> Result<()> {
    let family = single_family(rc)?;
    let f = family[0].n_features();
    let mut reports = Vec::new();
    for base in configs(rc, f)? {
        if !base.classifier.schema(f).is_tunable() {
            eprintln!("skipping {}: no tunable parameters", base.classifier);
            continue;
        }
        eprintln!("searching {} with {n_configs} configs per dataset", base.classifier);
        reports.push(random_search(&base, &family, n_configs, rc.seed, &rc.cv, None)?);
    }
    let ranking = best_of_random_ranking(&reports)?;
    write_results(
        rc,
        Results::Search {
            family: FamilyId::of(&family),
            reports,
            ranking,
        },
    )
}

fn curve(rc: &RunConfig) -> Result<()> {
    let mut fams = families(rc)?;
    for fam in &fams {
        if fam.is_empty() {
            return Err(CliError::Core(Error::Empty("dataset family")));
        }
    }
    fams.sort_by_key(|fam| fam[0].n_features());
    if fams.windows(2).any(|w| w[0][0].n_features() == w[1][0].n_features()) {
        return Err(CliError::Usage("curve families must have distinct feature counts".into()));
    }
    let ids = selected(rc);
    let mut series: Vec<CurveSeries> = ids
        .iter()
        .map(|&c| CurveSeries {
            classifier: c,
            points: Vec::new(),
        })
        .collect();
    for fam in &fams {
        let f = fam[0].n_features();
        eprintln!("curve point F = {f}");
        for e in default_benchmark(fam, &configs(rc, f)?, &rc.cv)? {
            let s = series.iter_mut().find(|s| s.classifier == e.classifier).expect("selected");
            s.points.push(CurvePoint {
                features: f,
                mean_accuracy: e.stats.mean,
            });
        }
    }
    write_results(rc, Results::Curve { series })
}

fn load_envelope(path: &Path) -> Result<Envelope> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Core(Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    })
}

/// Prefixes rendered output with the run config in a form the format
/// tolerates as a comment.
fn with_config(rc: &RunConfig, format: Format, body: String) -> String {
    match format {
        Format::Csv => format!("# run_config: {}\n{body}", compact_config(rc)),
        Format::Markdown => format!("<!-- run_config: {} -->\n\n{body}", compact_config(rc)),
        Format::Json => body,
    }
}

fn pick_table(results: &Results, table: Option<&str>) -> Result<Table> {
    let t = match (results, table) {
        (Results::Bench { entries, .. }, None | Some("bench")) => report::bench_table("Default benchmark", entries),
        (Results::Sweep { reports, .. }, None | Some("sweep")) => report::sweep_table("Parameter sensitivity", reports),
        (Results::Search { reports, .. }, None | Some("search")) => report::search_table("Random search", reports),
        (Results::Search { ranking, .. }, Some("ranking")) => report::ranking_table("Best of random", ranking),
        (_, Some(name)) => return Err(CliError::Usage(format!("result file has no `{name}` table"))),
        (Results::Curve { .. }, None) => unreachable!("curve output is rendered separately"),
    };
    Ok(t)
}

fn render(
    rc: &RunConfig,
    input: &Path,
    format: &str,
    table: Option<&str>,
    histograms: Option<&Path>,
    bins: usize,
) -> Result<()> {
    let format: Format = format.parse()?;
    let env = load_envelope(input)?;
    if let (Some(dir), Results::Search { reports, .. }) = (histograms, &env.results) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for r in reports {
            let deltas: Vec<f64> = r.deltas.iter().flatten().flatten().cloned().collect();
            let h = report::histogram(&deltas, bins)?;
            let path: PathBuf = dir.join(format!("{}.csv", r.classifier));
            let text = with_config(rc, Format::Csv, h.to_csv());
            fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        }
    } else if histograms.is_some() {
        return Err(CliError::Usage("histograms need a search result".into()));
    }
    let body = match (&env.results, format) {
        (Results::Curve { series }, Format::Json) => {
            pretty(&serde_json::json!({ "run_config": rc, "series": series }))
        }
        (Results::Curve { series }, _) => {
            if table.is_some() {
                return Err(CliError::Usage("curve results have a single data table".into()));
            }
            with_config(rc, Format::Csv, report::curve_data(series)?)
        }
        (results, Format::Json) => {
            let t = pick_table(results, table)?;
            pretty(&serde_json::json!({ "run_config": rc, "table": t }))
        }
        (results, _) => with_config(rc, format, report::render_table(&pick_table(results, table)?, format)?),
    };
    emit(rc.out.as_deref(), &body)
}
