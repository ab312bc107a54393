use thiserror::Error;

use crate::fock::ModeId;

/// Errors produced by state algebra, element application and detection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty state")]
    EmptyState,
    #[error("mode collision: {0}")]
    ModeCollision(ModeId),
    #[error("cannot normalize zero state")]
    ZeroNorm,
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("unknown mode: {0}")]
    UnknownMode(ModeId),
    #[error("unknown beam '{0}'")]
    UnknownBeam(String),
    #[error("beam '{0}' already carries photons")]
    BeamInUse(String),
    #[error("duplicate beam label '{0}'")]
    DuplicateBeam(String),
    #[error("detectors overlap on mode {0}")]
    DetectorOverlap(ModeId),
    #[error("pattern does not cover the declared detectors")]
    PatternMismatch,
    #[error("impossible outcome")]
    ImpossibleOutcome,
    #[error("{0}")]
    InvalidParameter(String),
    #[error("malformed state text: {0}")]
    MalformedStateText(String),
}

pub type Result<T> = std::result::Result<T, Error>;
