use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A record that could not be turned into a corpus entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: u64,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "line {}: field `{}`: {}", self.line, field, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: malformed records:\n{}", path.display(), join_lines(errors))]
    Malformed { path: PathBuf, errors: Vec<RecordError> },

    #[error("{}: line {line}: duplicate review id `{id}`", path.display())]
    DuplicateId { path: PathBuf, line: u64, id: String },

    #[error("{}: cannot infer the file format; pass --format csv or --format jsonl", path.display())]
    UnknownFormat { path: PathBuf },

    #[error(transparent)]
    Core(#[from] reviewranker_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("labels tie on reviews {}; resolve them before exporting", .0.join(", "))]
    UnresolvedTies(Vec<String>),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_lines(errors: &[RecordError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}
