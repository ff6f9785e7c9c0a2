use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("target loss {target} is not above the irreducible floor {gamma}")]
    InfeasibleTarget { target: f64, gamma: f64 },

    #[error("insufficient data: need at least {needed} distinct shard sizes, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-positive loss {value} at shard size {shard_size}")]
    NonPositiveLoss { shard_size: u64, value: f64 },

    #[error("observation at shard size {shard_size} has no model_params")]
    MissingModelParams { shard_size: u64 },

    #[error("no power-law region: {0}")]
    NoPowerLawRegion(String),

    #[error("invalid class count K={classes}, k={k}")]
    InvalidClassCount { classes: u64, k: u64 },

    #[error("invalid fractions: {0}")]
    InvalidFractions(String),

    #[error("dataset too small: smallest shard rounds to {0} records")]
    TooSmallDataset(u64),

    #[error("record count {got} does not match plan total {expected}")]
    SizeMismatch { expected: u64, got: u64 },

    #[error("invalid shard plan: {0}")]
    InvalidPlan(String),

    #[error("method mismatch: {0}")]
    MethodMismatch(String),

    #[error("learner failed at shard {shard_size}, capacity {capacity}: {message}")]
    LearnerFailure {
        shard_size: u64,
        capacity: u64,
        message: String,
    },

    #[error("empty {0}")]
    EmptyShard(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in machine-readable error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidCurve(_) => "InvalidCurve",
            Error::InfeasibleTarget { .. } => "InfeasibleTarget",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::NonPositiveLoss { .. } => "NonPositiveLoss",
            Error::MissingModelParams { .. } => "MissingModelParams",
            Error::NoPowerLawRegion(_) => "NoPowerLawRegion",
            Error::InvalidClassCount { .. } => "InvalidClassCount",
            Error::InvalidFractions(_) => "InvalidFractions",
            Error::TooSmallDataset(_) => "TooSmallDataset",
            Error::SizeMismatch { .. } => "SizeMismatch",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::MethodMismatch(_) => "MethodMismatch",
            Error::LearnerFailure { .. } => "LearnerFailure",
            Error::EmptyShard(_) => "EmptyShard",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
