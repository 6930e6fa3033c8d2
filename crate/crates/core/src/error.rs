use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("non-finite sample {value} at index {index:?}")]
    Sampling { index: Vec<usize>, value: f64 },

    #[error("grid functions live on different axes")]
    AxisMismatch,

    #[error("mode {mode} out of range for a {ndim}-way tensor")]
    ModeOutOfRange { mode: usize, ndim: usize },

    #[error("invalid mode subset {alpha:?} for a {ndim}-way tensor")]
    InvalidSubset { alpha: Vec<usize>, ndim: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("quadrature weights must be positive and match the matrix dimensions")]
    InvalidWeights,

    #[error("singular value {k} is zero; derivative transfer is undefined")]
    DegenerateMode { k: usize },

    #[error("rank {rank} exceeds the {available} available singular vectors of mode {mode}")]
    RankExceeds { mode: usize, rank: usize, available: usize },

    #[error("insufficient rank: need {needed}, have {available}")]
    InsufficientRank { needed: usize, available: usize },

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("operation needs a {expected}-way tensor, got {actual}")]
    Dimension { expected: String, actual: usize },

    #[error("empty probe set")]
    EmptyProbes,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("invalid parameters for case {case}: {reason}")]
    InvalidCaseParams { case: String, reason: String },

    #[error("singular value decomposition failed to converge")]
    SvdFailed,
}

pub type Result<T> = std::result::Result<T, Error>;
