//! Crate-wide error type.
//!
//! Every variant maps to a stable machine-greppable code via [`Error::code`];
//! the CLI prints `error[<code>]: <message>` on failure paths.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A dataset row that does not match `<label> qid:<id> <i>:<v> ... [#comment]`.
    /// `line` is 1-based; 0 means the line number is unknown (bare string parse).
    #[error("malformed record{}: {reason}", fmt_line(*.line))]
    MalformedLine { line: usize, reason: String },

    #[error("query {query_id} repeats rank label {label} (strict listwise mode)")]
    DuplicateRankLabel { query_id: String, label: u32 },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("document {doc_index} is not in the remaining set")]
    ActionNotAvailable { doc_index: usize },

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("model schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("exponential gain overflows for relevance {0} (maximum 62); use linear gain")]
    GainOverflow(u32),

    #[error("config error: {0}")]
    Config(String),
}

fn fmt_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

impl Error {
    /// Stable single-token code for scripted consumers of CLI stderr.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedLine { .. } => "malformed-line",
            Error::DuplicateRankLabel { .. } => "duplicate-rank-label",
            Error::EmptyDataset => "empty-dataset",
            Error::InvalidFractions(_) => "invalid-fractions",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ActionNotAvailable { .. } => "action-not-available",
            Error::EmptyBuffer => "empty-buffer",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::SchemaMismatch(_) => "schema-mismatch",
            Error::GainOverflow(_) => "gain-overflow",
            Error::Config(_) => "config",
        }
    }
}
