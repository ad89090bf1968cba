use std::fmt;
use std::path::PathBuf;

/// Which matrix invariant a loaded value broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Symmetry,
    Diagonal,
    Negative,
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::Symmetry => "symmetry",
            Violation::Diagonal => "zero-diagonal",
            Violation::Negative => "nonnegativity",
            Violation::NonFinite => "finiteness",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("row {row}: expected {expected} values, found {found}")]
    Dimension {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{violation} violation at ({row}, {col}): {detail}")]
    Invariant {
        violation: Violation,
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("strategy {strategy} is not deterministic: {detail}")]
    Nondeterministic { strategy: String, detail: String },

    #[error("strategy {strategy} diverges from {reference}: {detail}")]
    Divergence {
        reference: String,
        strategy: String,
        detail: String,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
