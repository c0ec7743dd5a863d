//! Batch driver for the DG / ROM / DD-ROM library: JSON configuration in,
//! CSV and JSON reports out.

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

/// Failure classes with stable process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<fs_ddrom::Error> for CliError {
    fn from(e: fs_ddrom::Error) -> Self {
        use fs_ddrom::Error as E;
        match e {
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::RankTooLarge { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
