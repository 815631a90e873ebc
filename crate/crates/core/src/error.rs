use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root is not bracketed: f(lo) - target = {lo_gap}, f(hi) - target = {hi_gap}")]
    NoBracket { lo_gap: f64, hi_gap: f64 },
    #[error("no convergence after {iterations} iterations")]
    MaxIterations { iterations: usize },
    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
