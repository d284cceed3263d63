use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("argument {value} of `{what}` outside [0, 1]")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("weight a({t}) = {value} is negative")]
    NegativeWeight { t: f64, value: f64 },

    #[error("Jacobian is singular")]
    SingularJacobian,

    #[error("finite-difference system is singular (pivot {row})")]
    SingularSystem { row: usize },
}
