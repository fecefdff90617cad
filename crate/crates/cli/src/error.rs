use std::fmt;

use qgeo::QgeoError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(QgeoError, Option<String>),
    Verification(Vec<String>),
    NotConverged,
    Io(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(e, _) => match e {
                QgeoError::Degenerate(_)
                | QgeoError::TransitionPoint(_)
                | QgeoError::Singular(_)
                | QgeoError::UndefinedCfim(_) => 3,
                QgeoError::Domain(_) | QgeoError::StepTooLarge(_) => 2,
                QgeoError::Inconsistency(_) => 1,
            },
            CliError::Verification(_) => 4,
            CliError::NotConverged => 5,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(e, None) => write!(f, "{e}"),
            CliError::Numeric(e, Some(hint)) => write!(f, "{e}\nhint: {hint}"),
            CliError::Verification(names) => write!(f, "verification failed: {}", names.join(", ")),
            CliError::NotConverged => write!(f, "adaptive run did not reach the peak"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<QgeoError> for CliError {
    fn from(e: QgeoError) -> Self {
        CliError::Numeric(e, None)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
