use std::path::PathBuf;

use thiserror::Error;

use crate::trainer::GrowthHistory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric divergence at step {step}: {reason}")]
    NumericDivergence { step: usize, reason: String },

    #[error("cannot add block: network already has the maximum of {max_blocks} blocks")]
    GrowthExhausted { max_blocks: usize },

    #[error("degenerate range: min {min} and max {max} must satisfy max > min")]
    DegenerateRange { min: f64, max: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{key} = {value} is outside the allowed range {bound}")]
    OutOfRange {
        key: String,
        value: String,
        bound: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged in epoch {epoch}: {source}")]
    TrainingDiverged {
        epoch: usize,
        history: Box<GrowthHistory>,
        #[source]
        source: Box<Error>,
    },

    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI's one-line error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::NumericDivergence { .. } => "numeric-divergence",
            Error::GrowthExhausted { .. } => "growth-exhausted",
            Error::DegenerateRange { .. } => "degenerate-range",
            Error::Parse { .. } => "parse",
            Error::OutOfRange { .. } => "out-of-range",
            Error::Io { .. } => "io",
            Error::TrainingDiverged { .. } => "numeric-divergence",
            Error::Seed { source, .. } => source.category(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
