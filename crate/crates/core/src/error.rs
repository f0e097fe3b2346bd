use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Galerkin dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("mode index {index} out of range for dimension {dim} (modes are 1-based)")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid time {0}: must be finite and nonnegative")]
    InvalidTime(f64),

    #[error("grid of {grid} points cannot resolve {dim} modes (aliasing)")]
    Aliasing { grid: usize, dim: usize },

    #[error("non-finite coefficient at mode {mode}")]
    NonFinite { mode: usize },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("inadmissible noise: Σ λ_j^(β-1) q_j diverges (exponent {exponent} must be < -1/2)")]
    InadmissibleNoise { exponent: f64 },

    #[error("invalid step size {0}")]
    InvalidStep(f64),

    #[error("{len} increments cannot be aggregated in blocks of {factor}")]
    IndivisibleLength { len: usize, factor: usize },

    #[error("inadmissible drift: {0}")]
    InadmissibleDrift(String),

    #[error("no dissipativity margin: K = {k} must be below λ₁ = π²")]
    NoDissipativity { k: f64 },

    #[error("step size {tau} outside the stability window (max {max})")]
    StabilityWindow { tau: f64, max: f64 },

    #[error("trajectory diverged at step {step}{}", replica.map(|r| format!(" (replica {r})")).unwrap_or_default())]
    Divergence { step: u64, replica: Option<usize> },

    #[error("alpha outside (1/4,1/2): {alpha}")]
    CouplingViolation { alpha: f64 },

    #[error("insufficient states: need {needed}, trajectory produced {got}")]
    InsufficientStates { needed: u64, got: u64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("batch means needs at least 20 batches, got {batches}")]
    TooFewBatches { batches: usize },

    #[error("target variance must be positive, got {0}")]
    InvalidVariance(f64),

    #[error("sample too short: need {needed}, got {got}")]
    SampleTooShort { needed: usize, got: usize },

    #[error("order fit needs positive values, got ({x}, {y})")]
    NonPositive { x: f64, y: f64 },

    #[error("horizon {horizon} is not a multiple of the step {tau}")]
    Horizon { horizon: f64, tau: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attach a replica index to a divergence error.
    pub fn in_replica(self, replica: usize) -> Self {
        match self {
            Error::Divergence { step, .. } => Error::Divergence { step, replica: Some(replica) },
            other => other,
        }
    }
}
