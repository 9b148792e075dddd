use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input must not be empty")]
    EmptyInput,

    #[error("risk value {0} outside [0, 1]")]
    RiskOutOfRange(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample size must be at least {min}, got {got}")]
    SampleSizeTooSmall { min: u64, got: u64 },

    #[error("confidence level delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("not a probability vector: {0}")]
    NotAProbability(String),

    #[error("prior weights must be strictly positive")]
    NonPositivePrior,

    #[error("operation requires a uniform prior")]
    NonUniformPrior,

    #[error("subset size {h_prime} out of range 2..={h}")]
    SubsetSizeOutOfRange { h_prime: usize, h: usize },

    #[error("exhaustive grid search rejected: {0} classifiers is too many")]
    OracleTooLarge(usize),

    #[error("grid denominator {0} too large for exhaustive search")]
    OracleGridTooFine(u32),

    #[error("requested {requested} grid values but only {available} exist")]
    GridTooSmall { requested: usize, available: usize },

    #[error("dataset has only {got} usable rows, need at least {min}")]
    DatasetTooSmall { min: usize, got: usize },

    #[error("label column '{0}' not found in header")]
    MissingLabelColumn(String),

    #[error("dataset contains a single class only")]
    SingleClass,

    #[error("a class is missing from the train+validation composite")]
    ClassMissing,

    #[error("all sampled points identical: degenerate geometry")]
    DegenerateGeometry,

    #[error("diverging coefficients while training at lambda = {0}")]
    TrainingDiverged(f64),

    #[error("malformed risk profile: {0}")]
    MalformedProfile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
