use alloc::string::String;

/// Errors raised by the core pipeline stages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("k = {k} is out of range for {nodes} nodes")]
    InvalidK { k: usize, nodes: usize },
    #[error("partition does not match graph: {0}")]
    PartitionMismatch(String),
    #[error("graph has no edges")]
    NoEdges,
    #[error("Markov chain needs at least two labels, got {0}")]
    EmptyChain(usize),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("not a motif: {0}")]
    NotAMotif(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
