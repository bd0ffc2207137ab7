use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "clfbench", version, about = "Compare classifiers on synthetic Gaussian dataset families")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Never changes a result.
    #[arg(long, global = true, env = "CLFBENCH_JOBS", default_value_t = 0)]
    pub jobs: usize,

    /// JSON run config; its fields override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset family into a directory.
    Gen {
        #[command(flatten)]
        generator: GeneratorArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every classifier at its defaults on one family.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One-dimensional parameter sensitivity.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep target such as `knn.K` or `svm.G:rbf`; repeatable. Default: all.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Random parameter search against the defaults.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        /// Random configurations per dataset.
        #[arg(long, default_value_t = 200)]
        configs: usize,
    },
    /// Default accuracy as the feature count grows.
    Curve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-render a stored result file as a table, curve CSV or histograms.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// csv, json or markdown.
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Which table of a result with several (`search` or `ranking`).
        #[arg(long)]
        table: Option<String>,
        /// Write one improvement histogram CSV per classifier here.
        #[arg(long)]
        histograms: Option<PathBuf>,
        #[arg(long, default_value_t = clfbench::report::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Export every parameter schema as JSON.
    Schemas {
        #[arg(long, default_value_t = 2)]
        features: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Feature count; a comma list for `curve`.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub features: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 40)]
    pub per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Datasets per family.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Give every root matrix at least as many columns as features.
    #[arg(long)]
    pub full_rank: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Family directory; repeatable for `curve`. Without it the family is
    /// generated from the generator flags.
    #[arg(long)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Classifier ids (comma list); default is the whole roster.
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Vec<String>,
    /// Parameter override `classifier.param=value`; repeatable.
    #[arg(long = "set")]
    pub overrides: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Seed of the fold assignment.
    #[arg(long, default_value_t = 1)]
    pub cv_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
