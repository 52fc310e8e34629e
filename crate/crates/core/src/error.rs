use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario file, line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing scenario key `{0}`")]
    MissingKey(String),

    #[error("unknown scenario key `{0}`")]
    UnknownKey(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("no consistent regime: {0}")]
    NoConsistentRegime(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by user input rather than by the solver.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidScenario(_)
                | Error::Parse { .. }
                | Error::MissingKey(_)
                | Error::UnknownKey(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
