use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quality distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid valuation function: {0}")]
    InvalidValuation(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("adaptive quadrature did not reach tolerance on [{lo}, {hi}]")]
    QuadratureDidNotConverge { lo: f64, hi: f64 },

    #[error("buyer index {index} out of range for {buyers} buyer(s)")]
    BuyerIndex { index: usize, buyers: usize },

    #[error("scheme addresses {found} buyer(s) but the market has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid signaling scheme: {0}")]
    InvalidScheme(String),

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
