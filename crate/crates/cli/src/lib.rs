//! Pipeline commands behind the `msft` binary.

pub mod commands;
pub mod config;
pub mod manifest;

pub use config::RunConfig;
pub use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("check failed: {0}")]
    Acceptance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 2 validation, 3 numerical failure, 4 failed check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Acceptance(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<msft_core::Error> for CliError {
    fn from(e: msft_core::Error) -> Self {
        use msft_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::SiteOutOfRange { .. }
            | E::EvenExtent(_)
            | E::DimensionMismatch { .. }
            | E::ModeMismatch(_) => CliError::Validation(e.to_string()),
            E::NotHermitian(_)
            | E::NotPositiveDefinite { .. }
            | E::ImaginaryResidue(_)
            | E::IntegratorFailure { .. } => CliError::Numeric(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Other(other.to_string()),
        }
    }
}
