//! CSV instances plus a JSON metadata sidecar per dataset.
//!
//! `ds_007.csv` has header `f1,...,fF,label`; its sidecar is `ds_007.json`.
//! Floats are written with Rust's shortest round-trip formatting, so a load
//! reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, DatasetMeta};
use crate::data::Samples;
use crate::error::{Error, Result};

pub fn dataset_file_name(index: usize) -> String {
    format!("ds_{index:03}.csv")
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let s = &d.samples;
    let mut out = String::with_capacity(s.len() * (s.n_features() + 1) * 20);
    for j in 1..=s.n_features() {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for i in 0..s.len() {
        for v in s.row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", s.label(i));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let meta = serde_json::to_string_pretty(&d.meta)?;
    let side = sidecar_path(path);
    fs::write(&side, meta).map_err(|e| Error::io(side, e))
}

fn parse_csv(path: &Path, text: &str, n_classes: usize) -> Result<Samples> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_features = cols.len().saturating_sub(1);
    let header_ok = cols.last() == Some(&"label")
        && cols[..n_features]
            .iter()
            .enumerate()
            .all(|(j, c)| *c == format!("f{}", j + 1));
    if !header_ok || n_features == 0 {
        return Err(bad(1, format!("expected header f1,...,fF,label, got `{header}`")));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_features + 1 {
            return Err(bad(
                lineno,
                format!("expected {} columns, got {}", n_features + 1, fields.len()),
            ));
        }
        for field in &fields[..n_features] {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(lineno, format!("bad feature value `{field}`")))?;
            if !v.is_finite() {
                return Err(bad(lineno, format!("non-finite feature value `{field}`")));
            }
            x.push(v);
        }
        let label: usize = fields[n_features]
            .parse()
            .map_err(|_| bad(lineno, format!("bad label `{}`", fields[n_features])))?;
        if label >= n_classes {
            return Err(bad(lineno, format!("label {label} outside 0..{n_classes}")));
        }
        y.push(label);
    }
    Samples::new(n_features, n_classes, x, y)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let side = sidecar_path(path);
    let meta_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        path: side.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let samples = parse_csv(path, &text, meta.spec.n_classes)?;
    if samples.n_features() != meta.spec.n_features {
        return Err(Error::Mismatch(format!(
            "{}: {} feature columns but metadata says {}",
            path.display(),
            samples.n_features(),
            meta.spec.n_features
        )));
    }
    Ok(Dataset { samples, meta })
}

pub fn save_family(datasets: &[Dataset], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for d in datasets {
        save_dataset(d, &dir.join(dataset_file_name(d.index())))?;
    }
    Ok(())
}

/// Loads every `ds_*.csv` in `dir`, ordered by file name.
pub fn load_family(dir: &Path) -> Result<Vec<Dataset>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("ds_"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no ds_*.csv files"),
        ));
    }
    paths.iter().map(|p| load_dataset(p)).collect()
}
