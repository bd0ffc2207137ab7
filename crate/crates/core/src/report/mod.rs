//! Tables, histograms and curve data rendered from protocol results.

mod histogram;

pub use histogram::{histogram, Histogram, DEFAULT_BINS};

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{BenchEntry, CurveSeries, RankEntry, SearchReport, SweepReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Number(v) => format!("{v:.2}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Column whose numbers order markdown rows, descending.
    pub sort_key: Option<usize>,
}

impl Table {
    pub fn new(title: &str, headers: &[&str]) -> Table {
        Table {
            title: title.to_string(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            sort_key: None,
        }
    }

    pub fn sorted_by(mut self, column: usize) -> Table {
        self.sort_key = Some(column);
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.headers.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if let Some(r) = self.rows.iter().find(|r| r.len() != self.headers.len()) {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: self.headers.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_table(t: &Table, format: Format) -> Result<String> {
    t.check()?;
    let mut out = String::new();
    match format {
        Format::Json => {
            out = serde_json::to_string_pretty(t)?;
            out.push('\n');
        }
        Format::Csv => {
            let header: Vec<String> = t.headers.iter().map(|h| csv_field(h)).collect();
            writeln!(out, "{}", header.join(",")).unwrap();
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|c| csv_field(&c.render())).collect();
                writeln!(out, "{}", cells.join(",")).unwrap();
            }
        }
        Format::Markdown => {
            let mut rows: Vec<&Vec<Cell>> = t.rows.iter().collect();
            if let Some(k) = t.sort_key {
                let key = |r: &Vec<Cell>| match r.get(k) {
                    Some(Cell::Number(v)) => *v,
                    _ => f64::NEG_INFINITY,
                };
                rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
            }
            writeln!(out, "### {}\n", t.title).unwrap();
            writeln!(out, "| {} |", t.headers.join(" | ")).unwrap();
            writeln!(out, "|{}", "---|".repeat(t.headers.len())).unwrap();
            for row in rows {
                let cells: Vec<String> = row.iter().map(|c| c.render().replace('|', "\\|")).collect();
                writeln!(out, "| {} |", cells.join(" | ")).unwrap();
            }
        }
    }
    Ok(out)
}

/// Mean, deviation, best and worst accuracy per classifier.
pub fn bench_table(title: &str, entries: &[BenchEntry]) -> Table {
    let mut t = Table::new(title, &["rank", "classifier", "mean", "deviation", "best", "worst"]).sorted_by(2);
    for (i, e) in entries.iter().enumerate() {
        let s = e.stats;
        t.rows.push(vec![
            Cell::Text((i + 1).to_string()),
            e.classifier.display_name().into(),
            s.mean.into(),
            s.deviation.into(),
            s.best.into(),
            s.worst.into(),
        ]);
    }
    t
}

pub fn sweep_table(title: &str, reports: &[SweepReport]) -> Table {
    let mut t = Table::new(title, &["classifier", "parameter", "mean_S", "std_S", "max_S"]).sorted_by(2);
    for r in reports {
        t.rows.push(vec![
            r.classifier.display_name().into(),
            format!("-{}", r.parameter).into(),
            r.mean_s.into(),
            r.std_s.into(),
            r.max_s.into(),
        ]);
    }
    t
}

pub fn search_table(title: &str, reports: &[SearchReport]) -> Table {
    let mut t = Table::new(title, &["classifier", "p_value", "mean", "deviation", "maximum", "failed"]).sorted_by(1);
    for r in reports {
        t.rows.push(vec![
            r.classifier.display_name().into(),
            r.p_value.into(),
            r.mean.into(),
            r.deviation.into(),
            r.maximum.into(),
            Cell::Text(r.failed.to_string()),
        ]);
    }
    t
}

pub fn ranking_table(title: &str, entries: &[RankEntry]) -> Table {
    let mut t = Table::new(title, &["rank", "classifier", "mean", "deviation"]).sorted_by(2);
    for e in entries {
        t.rows.push(vec![
            Cell::Text(e.rank.to_string()),
            e.classifier.display_name().into(),
            e.mean.into(),
            e.deviation.into(),
        ]);
    }
    t
}

/// Long-form `classifier,F,mean_accuracy` CSV.
pub fn curve_data(series: &[CurveSeries]) -> Result<String> {
    let mut out = String::from("classifier,F,mean_accuracy\n");
    for s in series {
        if s.points.windows(2).any(|w| w[0].features >= w[1].features) {
            return Err(Error::InvalidSpec(format!("{} curve is not sorted by feature count", s.classifier)));
        }
        for p in &s.points {
            writeln!(out, "{},{},{:.2}", csv_field(s.classifier.display_name()), p.features, p.mean_accuracy).unwrap();
        }
    }
    Ok(out)
}
