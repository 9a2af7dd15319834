use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes: `Config` and
/// `Domain` are validation failures (exit 1), the numerical variants are
/// runtime failures (exit 2).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel table could not reach the requested tail bound within the
    /// radius cap.
    #[error(
        "truncation failure: best tail bound {achieved:.3e} exceeds requested {requested:.3e} within radius cap {cap}"
    )]
    Truncation {
        achieved: f64,
        requested: f64,
        cap: usize,
    },

    /// Kernel mass would leak past the zero frame of a field, so the stored
    /// window no longer represents the unbounded lattice evolution.
    #[error("insufficient padding: {0}")]
    InsufficientPadding(String),

    /// A front probe found no occupied cells to measure.
    #[error("probe misses the front: {0}")]
    ProbeMiss(String),

    /// A root bracket did not contain a sign change.
    #[error("bracketing failure: {0}")]
    Bracketing(String),

    /// The adaptive ODE integrator could not meet its local tolerance.
    #[error("step size underflow in reference ODE integration")]
    StepSizeUnderflow,

    /// A configuration file or flag set failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
