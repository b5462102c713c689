use alloc::string::String;

use thiserror::Error;

/// Errors raised by the audit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Dataset or override shapes disagree.
    #[error("structural error: {0}")]
    Structure(String),
    /// A value or argument is outside its allowed domain.
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    /// Both groups receive zero exposure in the evaluated prefix.
    #[error("exposure gap undefined: both groups have zero exposure")]
    UndefinedGap,
    /// A pair direction has no positive or no negative items.
    #[error("pairwise accuracy undefined: quadrant {0} is empty")]
    EmptyQuadrant(&'static str),
    #[error("labels are required for {0}")]
    LabelsRequired(&'static str),
    /// A group's scores have zero spread, so per-group normalization is undefined.
    #[error("degenerate distribution in group `{0}`: zero standard deviation")]
    Degenerate(String),
    /// Exact delta matching needs four equally sized quadrants.
    #[error("delta matching needs equal quadrant sizes (got {0:?}); use conditional matching instead")]
    QuadrantSizes([usize; 4]),
    #[error("fix `{0}` cannot be used inside composition")]
    UnsupportedFix(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
