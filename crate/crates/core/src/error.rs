use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlocError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("argument outside the size domain: {0}")]
    Domain(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("simpson rule needs an even number of cells, got {0}")]
    OddCellCount(usize),
    #[error("growth rate must be positive, got {value} at node {node}")]
    NonpositiveGrowth { node: usize, value: f64 },
    #[error("eigenvalue iteration failed for a {0}x{0} matrix")]
    EigenFailure(usize),
    #[error("no sign change of K found for lambda down to {lambda_lo}")]
    BracketExhausted { lambda_lo: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, FlocError>;
