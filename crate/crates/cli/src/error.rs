use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// Failure of one command, carrying the process exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Reading or writing a file or stream failed.
    Io(String),
    /// Input was read but rejected.
    Invalid(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Io(_) => ExitCode::from(1),
            Self::Invalid(_) => ExitCode::from(2),
        }
    }

    pub fn severity(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(m) | Self::Invalid(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
