use std::fmt;

use ssleval_core::{Error, ErrorCategory, FormatError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitStatus {
    Ok = 0,
    /// Unreadable or malformed input files, output failures.
    Format = 1,
    /// Numerically undefined result.
    Math = 2,
    /// Input violates a precondition (e.g. fewer frames than clusters).
    Precondition = 3,
}

impl From<ErrorCategory> for ExitStatus {
    fn from(c: ErrorCategory) -> Self {
        match c {
            ErrorCategory::Format => ExitStatus::Format,
            ErrorCategory::Math => ExitStatus::Math,
            ErrorCategory::Precondition => ExitStatus::Precondition,
        }
    }
}

#[derive(Debug)]
pub struct CommandError {
    pub status: ExitStatus,
    pub error: anyhow::Error,
}

impl CommandError {
    pub fn new(status: ExitStatus, error: impl Into<anyhow::Error>) -> Self {
        Self {
            status,
            error: error.into(),
        }
    }

    pub fn format(error: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitStatus::Format, error)
    }

    pub fn precondition(error: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitStatus::Precondition, error)
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            status: self.status,
            error: self.error.context(ctx),
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        let status = e.category().into();
        let tag = match &e {
            Error::Format(f) => Some(f.kind()),
            _ => None,
        };
        let error = anyhow::Error::new(e);
        let error = match tag {
            Some(t) => error.context(format!("error[{t}]")),
            None => error,
        };
        Self { status, error }
    }
}

macro_rules! via_core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CommandError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

via_core_error!(
    FormatError,
    ssleval_core::SpectralError,
    ssleval_core::RankError,
    ssleval_core::ClusterError,
    ssleval_core::CorrelationError
);

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e).into()
    }
}
