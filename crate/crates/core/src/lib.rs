//! Fairness-aware loss reweighting for tabular classifiers.
//!
//! The scaling weights mix a learned per-group term with each sample's
//! previously observed loss, pass the mix through a temperature softmax and
//! rescale so the batch mean weight is one. Evaluation reports AUC per group
//! together with the spread of those AUCs (PSD) and the usual rate gaps.

pub mod data;
pub mod error;
pub mod fis;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod types;

pub use error::{Error, Result};
pub use fis::{
    fis_scaled_loss, fis_weights, gradient_coefficients, FisConfig, FisState, GradientMode,
    LossMemoryMode, ScalingWeights,
};
pub use metrics::{auc, full_report, max_psd, mean_psd, EvalSet};
pub use model::{
    backward, optimizer_step, per_sample_ce, AdamWConfig, Architecture, Gradients, ModelParams,
    OptimizerState,
};
pub use types::{
    split_dataset, Dataset, MetricsReport, Sample, SampleId, ScoredPrediction, SplitFractions,
};
