use std::fmt;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use hotlane_core::Error;

/// Everything a subcommand can fail with, mapped onto distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    Io { path: PathBuf, source: io::Error },
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Failure::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) => match e.root() {
                Error::Config { .. } => 3,
                Error::Assumption(_) => 4,
                Error::PriceUndefined(_) | Error::NotBracketed { .. } | Error::AtStep { .. } => 5,
            },
            Failure::Io { .. } => 6,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}
