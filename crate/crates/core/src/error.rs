use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A velocity reached or exceeded the speed of light.
    #[error("speed {speed} is not below c = {c}")]
    SpeedOfLight { speed: f64, c: f64 },

    /// The co-moving frame is undefined because the velocity is (numerically) zero.
    #[error("velocity norm {speed:e} is too small to define a co-moving direction")]
    DegenerateVelocity { speed: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed file content; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is numerical (speed limit, degenerate frame,
    /// overflow) rather than a usage or validation problem.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SpeedOfLight { .. } | Error::DegenerateVelocity { .. } | Error::NonFinite(_) => {
                true
            }
            Error::Trajectory { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
