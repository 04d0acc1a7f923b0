use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("filtration overflow: monomial of length {len} exceeds bound {bound} ({context})")]
    FiltrationOverflow { len: usize, bound: usize, context: String },
    #[error("arity overflow: arity {arity} exceeds bound {bound} ({context})")]
    ArityOverflow { arity: usize, bound: usize, context: String },
    #[error("precondition rejected: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
