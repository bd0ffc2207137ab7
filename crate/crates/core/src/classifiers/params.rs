//! Typed parameter schemas: default value, one-dimensional sweep grid and
//! random-search range for every classifier option.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassifierId;
use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Choice(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Choice(s) => f.write_str(s),
        }
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Choice(v.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Int,
    Real,
    Bool,
    Choice,
}

/// Where random search draws a parameter from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "snake_case")]
pub enum RandomRange {
    IntLinear { lo: i64, hi: i64 },
    IntLog { lo: i64, hi: i64 },
    RealLinear { lo: f64, hi: f64 },
    RealLog { lo: f64, hi: f64 },
    Bool,
    Choice { values: Vec<String> },
}

impl RandomRange {
    pub fn sample(&self, rng: &mut Rng) -> ParamValue {
        match self {
            RandomRange::IntLinear { lo, hi } => {
                ParamValue::Int(lo + rng.below((hi - lo + 1) as usize) as i64)
            }
            RandomRange::IntLog { lo, hi } => {
                // log-uniform on [lo, hi + 1) then floored, so each end is reachable
                let (a, b) = ((*lo as f64).ln(), ((*hi + 1) as f64).ln());
                let v = rng.uniform_range(a, b).exp().floor() as i64;
                ParamValue::Int(v.clamp(*lo, *hi))
            }
            RandomRange::RealLinear { lo, hi } => ParamValue::Real(rng.uniform_range(*lo, *hi)),
            RandomRange::RealLog { lo, hi } => {
                ParamValue::Real(rng.uniform_range(lo.ln(), hi.ln()).exp().clamp(*lo, *hi))
            }
            RandomRange::Bool => ParamValue::Bool(rng.bernoulli(0.5)),
            RandomRange::Choice { values } => {
                ParamValue::Choice(values[rng.below(values.len())].clone())
            }
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (RandomRange::IntLinear { lo, hi } | RandomRange::IntLog { lo, hi }, ParamValue::Int(i)) => {
                lo <= i && i <= hi
            }
            (
                RandomRange::RealLinear { lo, hi } | RandomRange::RealLog { lo, hi },
                ParamValue::Real(r),
            ) => lo <= r && r <= hi,
            (RandomRange::Bool, ParamValue::Bool(_)) => true,
            (RandomRange::Choice { values }, ParamValue::Choice(s)) => values.contains(s),
            _ => false,
        }
    }
}

/// A parameter that only matters when another parameter has one of
/// `values` (e.g. the RBF width only when `kernel = rbf`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveWhen {
    pub param: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub default: ParamValue,
    pub grid: Vec<ParamValue>,
    pub range: RandomRange,
    /// Parameter exists for completeness but does not change the model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inert: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_when: Option<ActiveWhen>,
    #[serde(default)]
    pub description: String,
    /// Admissible bounds for numeric values (inclusive).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl ParamSpec {
    fn new(name: &str, kind: ParamKind, default: ParamValue, description: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind,
            default,
            grid: Vec::new(),
            range: RandomRange::Bool,
            inert: false,
            active_when: None,
            description: description.to_string(),
            bounds: None,
        }
    }

    pub(crate) fn int(name: &str, default: i64, description: &str) -> Self {
        ParamSpec::new(name, ParamKind::Int, ParamValue::Int(default), description)
    }

    pub(crate) fn real(name: &str, default: f64, description: &str) -> Self {
        ParamSpec::new(name, ParamKind::Real, ParamValue::Real(default), description)
    }

    pub(crate) fn flag(name: &str, description: &str) -> Self {
        let mut p = ParamSpec::new(name, ParamKind::Bool, ParamValue::Bool(false), description);
        p.grid = vec![ParamValue::Bool(true)];
        p
    }

    pub(crate) fn choice(name: &str, default: &str, values: &[&str], description: &str) -> Self {
        let mut p = ParamSpec::new(name, ParamKind::Choice, default.into(), description);
        p.grid = values
            .iter()
            .filter(|v| **v != default)
            .map(|v| ParamValue::from(*v))
            .collect();
        p.range = RandomRange::Choice {
            values: values.iter().map(|v| v.to_string()).collect(),
        };
        p
    }

    pub(crate) fn grid_ints(mut self, values: impl IntoIterator<Item = i64>) -> Self {
        self.grid = values.into_iter().map(ParamValue::Int).collect();
        self
    }

    pub(crate) fn grid_reals(mut self, values: impl IntoIterator<Item = f64>) -> Self {
        self.grid = values.into_iter().map(ParamValue::Real).collect();
        self
    }

    pub(crate) fn range(mut self, range: RandomRange) -> Self {
        self.range = range;
        self
    }

    pub(crate) fn bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub(crate) fn inert(mut self) -> Self {
        self.inert = true;
        self
    }

    pub(crate) fn active_when(mut self, param: &str, values: &[&str]) -> Self {
        self.active_when = Some(ActiveWhen {
            param: param.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
        });
        self
    }

    /// Coerces `v` to this parameter's kind and checks admissibility.
    pub fn admit(&self, classifier: ClassifierId, v: ParamValue) -> Result<ParamValue> {
        let err = |reason: String| Error::ParamRange {
            classifier: classifier.to_string(),
            name: self.name.clone(),
            reason,
        };
        let v = match (self.kind, v) {
            (ParamKind::Int, ParamValue::Int(i)) => ParamValue::Int(i),
            (ParamKind::Int, ParamValue::Real(r)) if r.fract() == 0.0 => ParamValue::Int(r as i64),
            (ParamKind::Real, ParamValue::Real(r)) => ParamValue::Real(r),
            (ParamKind::Real, ParamValue::Int(i)) => ParamValue::Real(i as f64),
            (ParamKind::Bool, ParamValue::Bool(b)) => ParamValue::Bool(b),
            (ParamKind::Choice, ParamValue::Choice(s)) => ParamValue::Choice(s),
            (ParamKind::Choice, other @ (ParamValue::Int(_) | ParamValue::Real(_))) => {
                ParamValue::Choice(other.to_string())
            }
            (kind, other) => return Err(err(format!("expected {kind:?}, got `{other}`"))),
        };
        match (&v, self.bounds) {
            (ParamValue::Int(i), Some((lo, hi))) if (*i as f64) < lo || (*i as f64) > hi => {
                return Err(err(format!("{i} not in [{lo}, {hi}]")));
            }
            (ParamValue::Real(r), Some((lo, hi))) if !(*r >= lo && *r <= hi) => {
                return Err(err(format!("{r} not in [{lo}, {hi}]")));
            }
            (ParamValue::Choice(s), _) => {
                if let RandomRange::Choice { values } = &self.range {
                    if !values.contains(s) {
                        return Err(err(format!("`{s}` not one of {values:?}")));
                    }
                }
            }
            _ => {}
        }
        Ok(v)
    }

    /// Parses a command-line value such as `10`, `0.5`, `true` or `rbf`.
    pub fn parse(&self, classifier: ClassifierId, text: &str) -> Result<ParamValue> {
        let v = match self.kind {
            ParamKind::Bool => match text {
                "true" | "1" | "on" => ParamValue::Bool(true),
                "false" | "0" | "off" => ParamValue::Bool(false),
                _ => ParamValue::Choice(text.to_string()),
            },
            ParamKind::Int => text
                .parse::<i64>()
                .map(ParamValue::Int)
                .unwrap_or_else(|_| ParamValue::Choice(text.to_string())),
            ParamKind::Real => text
                .parse::<f64>()
                .map(ParamValue::Real)
                .unwrap_or_else(|_| ParamValue::Choice(text.to_string())),
            ParamKind::Choice => ParamValue::Choice(text.to_string()),
        };
        self.admit(classifier, v)
    }
}

/// One row of a one-dimensional sensitivity table: a parameter swept over
/// its grid, with `overrides` applied on top of the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTarget {
    pub label: String,
    pub param: String,
    pub overrides: Vec<(String, ParamValue)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSchema {
    pub classifier: ClassifierId,
    pub params: Vec<ParamSpec>,
}

impl ParamSchema {
    pub fn get(&self, name: &str) -> Result<&ParamSpec> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter {
                classifier: self.classifier.to_string(),
                name: name.to_string(),
            })
    }

    pub fn default_config(&self) -> ClassifierConfig {
        ClassifierConfig {
            classifier: self.classifier,
            values: self
                .params
                .iter()
                .map(|p| (p.name.clone(), p.default.clone()))
                .collect(),
        }
    }

    /// A random configuration; every non-inert parameter is drawn
    /// independently, inert ones keep their defaults.
    pub fn sample(&self, rng: &mut Rng) -> ClassifierConfig {
        ClassifierConfig {
            classifier: self.classifier,
            values: self
                .params
                .iter()
                .map(|p| {
                    let v = if p.inert { p.default.clone() } else { p.range.sample(rng) };
                    (p.name.clone(), v)
                })
                .collect(),
        }
    }

    pub fn is_tunable(&self) -> bool {
        self.params.iter().any(|p| !p.inert)
    }

    pub fn sweep_targets(&self) -> Vec<SweepTarget> {
        let mut out = Vec::new();
        for p in &self.params {
            match &p.active_when {
                None => out.push(SweepTarget {
                    label: p.name.clone(),
                    param: p.name.clone(),
                    overrides: Vec::new(),
                }),
                Some(cond) => {
                    for v in &cond.values {
                        out.push(SweepTarget {
                            label: format!("{}:{}", p.name, v),
                            param: p.name.clone(),
                            overrides: vec![(cond.param.clone(), ParamValue::Choice(v.clone()))],
                        });
                    }
                }
            }
        }
        out
    }

    /// Resolves `E`, `E:normpoly`, `G` ... to a sweep target. A bare name of
    /// a conditional parameter picks its first context.
    pub fn sweep_target(&self, label: &str) -> Result<SweepTarget> {
        let targets = self.sweep_targets();
        targets
            .iter()
            .find(|t| t.label == label)
            .or_else(|| targets.iter().find(|t| t.param == label))
            .cloned()
            .ok_or_else(|| Error::UnknownParameter {
                classifier: self.classifier.to_string(),
                name: label.to_string(),
            })
    }
}

/// A full assignment of a classifier's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub classifier: ClassifierId,
    pub values: BTreeMap<String, ParamValue>,
}

impl ClassifierConfig {
    /// Default configuration for a dataset with `n_features` features.
    pub fn default_for(classifier: ClassifierId, n_features: usize) -> Self {
        classifier.schema(n_features).default_config()
    }

    pub fn set(&mut self, schema: &ParamSchema, name: &str, value: ParamValue) -> Result<()> {
        let spec = schema.get(name)?;
        let v = spec.admit(self.classifier, value)?;
        self.values.insert(name.to_string(), v);
        Ok(())
    }

    pub fn with(mut self, schema: &ParamSchema, name: &str, value: impl Into<ParamValue>) -> Result<Self> {
        self.set(schema, name, value.into())?;
        Ok(self)
    }

    /// Checks every value against `schema` and fills defaults for missing ones.
    pub fn validated(&self, schema: &ParamSchema) -> Result<ClassifierConfig> {
        if schema.classifier != self.classifier {
            return Err(Error::Mismatch(format!(
                "config for {} checked against schema for {}",
                self.classifier, schema.classifier
            )));
        }
        for name in self.values.keys() {
            schema.get(name)?;
        }
        let mut values = BTreeMap::new();
        for p in &schema.params {
            let v = match self.values.get(&p.name) {
                Some(v) => p.admit(self.classifier, v.clone())?,
                None => p.default.clone(),
            };
            values.insert(p.name.clone(), v);
        }
        Ok(ClassifierConfig {
            classifier: self.classifier,
            values,
        })
    }

    fn missing(&self, name: &str) -> Error {
        Error::UnknownParameter {
            classifier: self.classifier.to_string(),
            name: name.to_string(),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.values.get(name) {
            Some(ParamValue::Int(i)) => Ok(*i),
            Some(ParamValue::Real(r)) if r.fract() == 0.0 => Ok(*r as i64),
            _ => Err(self.missing(name)),
        }
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        match self.values.get(name) {
            Some(ParamValue::Real(r)) => Ok(*r),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            _ => Err(self.missing(name)),
        }
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        match self.values.get(name) {
            Some(ParamValue::Bool(b)) => Ok(*b),
            _ => Err(self.missing(name)),
        }
    }

    pub fn choice(&self, name: &str) -> Result<String> {
        match self.values.get(name) {
            Some(ParamValue::Choice(s)) => Ok(s.clone()),
            Some(other @ (ParamValue::Int(_) | ParamValue::Real(_))) => Ok(other.to_string()),
            _ => Err(self.missing(name)),
        }
    }

    pub(crate) fn range_error(&self, name: &str, reason: impl Into<String>) -> Error {
        Error::ParamRange {
            classifier: self.classifier.to_string(),
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ClassifierConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.classifier)?;
        for (k, v) in &self.values {
            write!(f, " -{k} {v}")?;
        }
        Ok(())
    }
}
