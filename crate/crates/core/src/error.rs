use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("group {group} out of range for {groups} groups")]
    InvalidGroup { group: usize, groups: usize },

    #[error("group {0} has no samples")]
    EmptyGroup(usize),

    #[error("duplicate sample id {0}")]
    DuplicateId(u64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative per-sample weight at index {0}")]
    NegativeWeight(usize),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),

    #[error("fusion weight must lie in [0, 1], got {0}")]
    InvalidFusionWeight(f64),

    #[error("AUC undefined: need at least one positive and one negative label")]
    UndefinedAuc,

    #[error("group {group} metric undefined: {reason}")]
    UndefinedGroup { group: usize, reason: &'static str },

    #[error("overall performance must be positive, got {0}")]
    NonPositiveOverall(f64),

    #[error("need at least 2 group values, got {0}")]
    TooFewGroups(usize),

    #[error("invalid prediction for sample {id}: {reason}")]
    InvalidPrediction { id: u64, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("missing value at line {line}, column `{column}`")]
    MissingValue { line: u64, column: String },

    #[error("cannot parse `{value}` at line {line}, column `{column}`")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Stable short tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "empty_dataset",
            Error::InvalidFractions(_) => "invalid_fractions",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidLabel { .. } => "invalid_label",
            Error::InvalidGroup { .. } => "invalid_group",
            Error::EmptyGroup(_) => "empty_group",
            Error::DuplicateId(_) => "duplicate_id",
            Error::NonFinite(_) => "non_finite",
            Error::NegativeWeight(_) => "negative_weight",
            Error::EmptyBatch => "empty_batch",
            Error::InvalidTemperature(_) => "invalid_temperature",
            Error::InvalidFusionWeight(_) => "invalid_fusion_weight",
            Error::UndefinedAuc => "undefined_auc",
            Error::UndefinedGroup { .. } => "undefined_group",
            Error::NonPositiveOverall(_) => "non_positive_overall",
            Error::TooFewGroups(_) => "too_few_groups",
            Error::InvalidPrediction { .. } => "invalid_prediction",
            Error::InvalidConfig(_) => "invalid_config",
            Error::MissingColumn(_) => "missing_column",
            Error::MissingValue { .. } => "missing_value",
            Error::Parse { .. } => "parse",
            Error::EmptyFile => "empty_file",
            Error::Diverged { .. } => "diverged",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Toml(_) => "toml",
        }
    }
}
