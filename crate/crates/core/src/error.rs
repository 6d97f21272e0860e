use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("value out of range of the inverted function: {0}")]
    OutOfRange(String),
    #[error("loss of precision: {0}")]
    Precision(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("condition not satisfied: {0}")]
    Condition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code used by the command line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "PARAMETER",
            Error::Domain(_) => "DOMAIN",
            Error::Quadrature(_) => "QUADRATURE",
            Error::Bracket(_) => "BRACKET",
            Error::OutOfRange(_) => "OUT_OF_RANGE",
            Error::Precision(_) => "PRECISION",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::Condition(_) => "CONDITION",
            Error::Budget(_) => "BUDGET",
            Error::Config(_) => "CONFIG",
            Error::Io(_) => "IO",
        }
    }

    /// True for errors caused by the input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Config(_) | Error::Io(_) | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
