use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interaction exponent s = {s} is outside (0, {d})")]
    KernelDomain { s: f64, d: usize },

    #[error("unsupported dimension d = {0}")]
    Dimension(usize),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("total mass {mass} does not equal the integer particle number {n}")]
    NonIntegerMass { mass: f64, n: usize },

    #[error("configuration budget exceeded: {needed} configurations > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
