use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] tqd_core::Error),

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0} of the acceptance criteria failed")]
    Verification(usize),
}

impl CliError {
    /// 1 verification or other failure, 2 configuration, 3 numerical
    /// instability, 4 resource cap, 5 output I/O.
    pub fn exit_code(&self) -> u8 {
        use tqd_core::Error as E;
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(E::Parameter(_) | E::PulseSynthesis { .. }) => 2,
            CliError::Core(E::Instability { .. } | E::StepSize { .. }) => 3,
            CliError::Core(E::ResourceLimit(_)) => 4,
            CliError::Core(_) => 1,
            CliError::Io { .. } => 5,
        }
    }
}
