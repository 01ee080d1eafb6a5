use std::fmt;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments; exit code 2.
    Usage(String),
    /// Unreadable or invalid input data; exit code 3.
    Data(String),
    /// A numerical routine failed; exit code 4.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<nmdep::Error> for CliError {
    fn from(e: nmdep::Error) -> Self {
        use nmdep::Error as E;
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            E::Ties { .. } | E::TooFewObservations { .. } | E::DimensionMismatch { .. } => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
