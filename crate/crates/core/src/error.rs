use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A problem with one input row. Rows are 1-based data rows (header excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} invalid row(s): {}", .0.len(), join_rows(.0))]
    Rows(Vec<RowError>),
    #[error("{0}")]
    Data(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn join_rows(rows: &[RowError]) -> String {
    const SHOWN: usize = 10;
    let mut parts: Vec<String> = rows.iter().take(SHOWN).map(ToString::to_string).collect();
    if rows.len() > SHOWN {
        parts.push(format!("... and {} more", rows.len() - SHOWN));
    }
    parts.join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 1 usage, 2 data, 3 remote/provider.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 1,
            Error::Probe(ProbeError::Transport(_) | ProbeError::Protocol(_)) | Error::Provider(_) => 3,
            _ => 2,
        }
    }
}

/// Failure of a [`Probe`](crate::classifier::Probe) call.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    /// The endpoint could not be reached, even after retries.
    #[error("probe transport failure: {0}")]
    Transport(String),
    /// The endpoint answered but the body broke the prediction protocol.
    #[error("probe protocol violation: {0}")]
    Protocol(String),
    #[error("probe failure: {0}")]
    Model(String),
}

/// Failure talking to an LLM provider.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider transport failure: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    Response(String),
    #[error("no replay entry for iteration {iteration}, request {request_hash}")]
    ReplayMiss { iteration: usize, request_hash: String },
    #[error("provider configuration: {0}")]
    Config(String),
}
