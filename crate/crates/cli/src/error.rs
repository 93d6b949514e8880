//! CLI errors and their exit codes.

use memesim_core::ErrorKind;
use memesim_service::ServiceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] memesim_core::Error),

    #[error(transparent)]
    Service(#[from] ServiceError),
}

pub type CliResult<T> = Result<T, CliError>;

/// Exit status for command-line usage errors (matches clap's own).
pub const EXIT_USAGE: u8 = 2;

fn kind_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io => 3,
        ErrorKind::Input => 4,
        ErrorKind::Alignment => 5,
        ErrorKind::Data => 6,
        ErrorKind::Config => 7,
        ErrorKind::Conflict => 8,
        ErrorKind::Empty => 9,
        ErrorKind::Lookup => 10,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => kind_code(e.kind()),
            CliError::Service(ServiceError::Core(e)) => kind_code(e.kind()),
            CliError::Service(ServiceError::Config(_)) => 7,
            CliError::Service(ServiceError::MissingInputs(_) | ServiceError::Serve(_)) => 11,
            CliError::Service(ServiceError::Bind { .. }) => 12,
        }
    }

    /// Short category name printed before the message.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            3 => "io",
            4 => "input",
            5 => "alignment",
            6 => "data",
            7 => "config",
            8 => "conflict",
            9 => "empty",
            10 => "lookup",
            11 => "service",
            12 => "bind",
            _ => "error",
        }
    }
}
