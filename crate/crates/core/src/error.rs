use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("structure file: {0}")]
    StructureFormat(String),

    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid variable pair ({x}, {y}): {reason}")]
    InvalidPair { x: usize, y: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("test for ({x}, {y} | {z:?}) is not cached")]
    CacheMiss { x: usize, y: usize, z: Vec<usize> },
}

pub type Result<T> = std::result::Result<T, Error>;
