use std::fmt;
use std::process::ExitCode;

/// A command failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad arguments, unreadable or malformed files.
    Input,
    /// The optimizer or geometry produced non-finite or invalid numbers.
    Numerical,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Input,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Numerical,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            FailureKind::Input => ExitCode::from(1),
            FailureKind::Numerical => ExitCode::from(2),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<signfit::error::Error> for Failure {
    fn from(e: signfit::error::Error) -> Self {
        if e.is_numerical() {
            Failure::numerical(e.to_string())
        } else {
            Failure::input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}
