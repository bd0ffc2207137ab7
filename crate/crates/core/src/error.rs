use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("infeasible moment targets: {0}")]
    Infeasible(String),

    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),

    #[error("classifier `{classifier}` has no parameter `{name}`")]
    UnknownParameter { classifier: String, name: String },

    #[error("parameter {classifier}.{name} out of range: {reason}")]
    ParamRange {
        classifier: String,
        name: String,
        reason: String,
    },

    #[error("cannot stratify into {folds} folds: class {class} has only {count} instances")]
    Stratification {
        class: usize,
        count: usize,
        folds: usize,
    },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("SMO did not converge; worst KKT violation {worst_violation:e}")]
    Convergence { worst_violation: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("{0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical routines themselves (as opposed to
    /// bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence(_)
                | Error::Convergence { .. }
                | Error::Infeasible(_)
                | Error::NotSymmetric { .. }
        )
    }
}
