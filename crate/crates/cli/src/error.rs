use thiserror::Error;

/// Exit code for a rejected configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for a numerical-domain failure.
pub const EXIT_DOMAIN: i32 = 3;
/// Exit code for I/O and serialization failures.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] hybrid_lattice::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use hybrid_lattice::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidInput(_) | E::Unsupported(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_DOMAIN,
            CliError::Io(_) | CliError::Json(_) | CliError::Csv(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
