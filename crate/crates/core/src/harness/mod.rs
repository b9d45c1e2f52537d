//! Experiment runs: configuration, training loop, multi-seed aggregation,
//! method comparison and parameter sweeps.

mod compare;
mod config;
mod record;
mod train;

pub use compare::{
    compare, run_experiment, run_experiment_on, run_seed, sweep, ComparisonRow, ComparisonTable,
    MethodSpec, SweepParam, SweepRow, SweepTable,
};
pub use config::{
    DataSource, ExperimentConfig, Method, Selection, TrainSettings, TESTBED_DATA_SEED,
};
pub use record::{
    aggregate, load_predictions, read_predictions, summary, write_predictions, MetricSummary,
    RunRecord, SeedRun,
};
pub use train::{
    evaluate, load_data, prepare, train, train_on, PreparedData, Standardizer, TrainOutcome,
    TrainedModel,
};
