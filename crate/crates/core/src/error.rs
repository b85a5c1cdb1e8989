use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is {distance:.3} m from the path, outside the {corridor:.3} m corridor")]
    CorridorExceeded { distance: f64, corridor: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("no admissible parameters: {0}")]
    Infeasible(String),

    #[error("no solution within budget: {0}")]
    NoSolution(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Config(#[from] toml::de::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot error: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::DomainViolation(msg.into())
    }
}
