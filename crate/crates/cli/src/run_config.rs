//! The serializable description of one run; embedded in every output file.

use std::path::PathBuf;

use clfbench::datagen::GeneratorSpec;
use clfbench::{ClassifierId, CvSettings};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Protocol {
    Gen,
    Bench,
    Sweep {
        /// `classifier.label` entries, e.g. `knn.K` or `svm.G:rbf`. Empty
        /// means every sweep target of the selected classifiers.
        #[serde(default)]
        parameters: Vec<String>,
    },
    Search {
        n_configs: usize,
    },
    Curve,
    Report {
        input: PathBuf,
        format: String,
        #[serde(default)]
        table: Option<String>,
        #[serde(default)]
        histograms: Option<PathBuf>,
        bins: usize,
    },
    Schemas {
        features: usize,
    },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Gen => "gen",
            Protocol::Bench => "bench",
            Protocol::Sweep { .. } => "sweep",
            Protocol::Search { .. } => "search",
            Protocol::Curve => "curve",
            Protocol::Report { .. } => "report",
            Protocol::Schemas { .. } => "schemas",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub seed: u64,
    /// Families generated in memory for this run.
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    /// Family directories read from disk.
    #[serde(default)]
    pub data: Vec<PathBuf>,
    #[serde(default)]
    pub classifiers: Vec<ClassifierId>,
    /// `classifier.param=value` assignments applied over the defaults.
    #[serde(default)]
    pub overrides: Vec<String>,
    #[serde(default)]
    pub cv: CvSettings,
    /// Output file, or directory for `gen`. `None` writes to standard output.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Replaces every top-level field present in `file`.
    pub fn overlay(self, file: Value) -> Result<RunConfig, CliError> {
        let Value::Object(patch) = file else {
            return Err(CliError::Usage("run config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(&self).expect("run config serializes");
        let obj = base.as_object_mut().expect("run config is an object");
        for (k, v) in patch {
            if !obj.contains_key(&k) {
                return Err(CliError::Usage(format!("run config file has unknown field `{k}`")));
            }
            obj.insert(k, v);
        }
        let merged: RunConfig =
            serde_json::from_value(base).map_err(|e| CliError::Usage(format!("invalid run config: {e}")))?;
        if merged.protocol.name() != self.protocol.name() {
            return Err(CliError::Usage(format!(
                "run config is for `{}` but the subcommand is `{}`",
                merged.protocol.name(),
                self.protocol.name()
            )));
        }
        Ok(merged)
    }
}
