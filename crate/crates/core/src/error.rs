use std::path::PathBuf;

use thiserror::Error;

use crate::linguistic::Hand;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing directory: {}", .0.display())]
    MissingDirectory(PathBuf),

    /// A file could be read but its content is malformed.
    #[error("{file}: {message}")]
    Malformed { file: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("untrackable sequence: no wrist was ever detected")]
    UntrackableSequence,

    #[error("no sign motion found")]
    NoSignMotion,

    #[error("sequence too short for interval heuristic (T = {0}, need at least 8)")]
    SequenceTooShort(usize),

    #[error("torso (neck and mid-hip) never detected")]
    TorsoUndetected,

    #[error("{hand} wrist never detected")]
    WristUndetected { hand: Hand },

    #[error("non-positive depth at point {index} (z = {z})")]
    NonPositiveDepth { index: usize, z: f64 },

    #[error("joint count mismatch for {what}: expected {expected}, found {found}")]
    JointCount {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("no reliable frames for reference pose")]
    NoReliableFrames,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invariance enabled for the {0} hand but no reference pose sequence was supplied")]
    MissingReference(Hand),

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("invalid decision tree at node {node}: {message}")]
    InvalidTree { node: usize, message: String },

    #[error("unknown region {0:?}")]
    UnknownRegion(String),

    #[error("parse error at position {position}: {message}")]
    HamNoSys { position: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(file: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Malformed {
            file: file.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::NonPositiveDepth { .. })
    }
}
