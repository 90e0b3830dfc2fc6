use std::fmt;
use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single configuration violation: which key, what value, which constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub value: String,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.key, self.value, self.constraint)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{0}: event log contains no rows")]
    EmptyLog(PathBuf),

    #[error("degenerate bounds: all {axis} values are equal")]
    DegenerateBounds { axis: &'static str },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("model file is corrupt: {0}")]
    CorruptModel(String),

    #[error("unsupported model format_version {found} (expected {expected})")]
    ModelVersion { found: u64, expected: u64 },

    #[error("model schema violation at `{field}`: {message}")]
    ModelSchema { field: String, message: String },

    #[error("invalid configuration:\n{}", format_violations(.0))]
    Config(Vec<Violation>),

    #[error("failed to write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
