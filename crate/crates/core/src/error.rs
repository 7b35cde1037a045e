//! Error taxonomy shared across the crate.
//!
//! Every error belongs to one of three categories that map 1:1 onto the
//! CLI exit codes: configuration problems (2), data problems (3), and
//! runtime protocol/invariant violations (4).

use thiserror::Error;

/// Coarse error category, used for exit codes and machine-parsable diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid or inconsistent configuration.
    Config,
    /// Dataset could not be loaded or partitioned.
    Data,
    /// A runtime invariant or protocol rule was violated.
    Runtime,
}

impl ErrorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Runtime => "runtime",
        }
    }

    /// Process exit code for this category.
    pub fn exit_code(&self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Runtime => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature dimensionality mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("hypervector dimensionality mismatch: expected {expected}, got {actual}")]
    HypervectorDimension { expected: usize, actual: usize },

    #[error("sample {sample_index}: label {label} out of range for {class_count} classes")]
    LabelOutOfRange {
        sample_index: usize,
        label: usize,
        class_count: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to load {path}: {detail}")]
    Load { path: String, detail: String },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("ledger order violation: expected entry for round {expected_round} client {expected_client}, got round {round} client {client}")]
    LedgerOrder {
        expected_round: u64,
        expected_client: u64,
        round: u64,
        client: u64,
    },

    #[error("client {client} has no local samples at round {round}")]
    EmptyClient { round: u64, client: u64 },

    #[error("runtime invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch { .. } | Error::Config(_) => ErrorKind::Config,
            Error::LabelOutOfRange { .. } | Error::Load { .. } | Error::Partition(_) => {
                ErrorKind::Data
            }
            Error::HypervectorDimension { .. }
            | Error::LedgerOrder { .. }
            | Error::EmptyClient { .. }
            | Error::Invariant(_)
            | Error::Io(_) => ErrorKind::Runtime,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
