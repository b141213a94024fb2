use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One offending row of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Battery file violates the test schema.
    #[error("battery validation failed: {test}: {field}: {message}")]
    Battery {
        test: String,
        field: String,
        message: String,
    },

    #[error("corpus rejected ({} bad rows): {}", .0.len(), join_rows(.0))]
    CorpusRows(Vec<RowError>),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("embedding file line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("vector math: {0}")]
    Vector(String),

    #[error("training: {0}")]
    Training(String),

    #[error("weat: {0}")]
    Weat(String),

    #[error("report: {0}")]
    Report(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn join_rows(rows: &[RowError]) -> String {
    const SHOWN: usize = 5;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if rows.len() > SHOWN {
        s.push_str(&format!("; ... {} more", rows.len() - SHOWN));
    }
    s
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn battery(
        test: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Battery {
            test: test.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    /// I/O failures are distinguished from validation failures by the CLI exit code.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
