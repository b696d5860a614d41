use fpme_core::error::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Rejected before any compute.
    Config(String),
    /// A numerical invariant failed during the run.
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Invariant(_) => 3,
            Self::Io(_) => 1,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Self::Config(_) => "config-error",
            Self::Invariant(_) => "invariant-violation",
            Self::Io(_) => "io-error",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Invariant(m) => write!(f, "invariant violation: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_) | Error::InvalidOrder(_) | Error::InvalidParameter(_) | Error::Regime(_) => {
                Self::Config(e.to_string())
            }
            Error::Io(m) => Self::Io(m),
            _ => Self::Invariant(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
