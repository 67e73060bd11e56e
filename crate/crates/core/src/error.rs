use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("box side length must be at least 2, got {0}")]
    InvalidSize(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("lattice mismatch: expected side {expected}, got {actual}")]
    LatticeMismatch { expected: usize, actual: usize },
    #[error("edge index {edge} out of range for {edge_count} edges")]
    InvalidEdge { edge: usize, edge_count: usize },
    #[error("vertex ({x}, {y}) outside the box")]
    InvalidVertex { x: i64, y: i64 },
    #[error("enumeration over {free} free edges exceeds the cap of {cap}")]
    EnumerationCap { free: usize, cap: usize },
    #[error("coupling-from-the-past did not coalesce within {cap} steps")]
    CftpCapExceeded { cap: u64 },
    #[error("monotone containment violated at step {step}: {detail}")]
    ContainmentViolation { step: u64, detail: String },
    #[error("malformed configuration encoding: {0}")]
    Decode(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
