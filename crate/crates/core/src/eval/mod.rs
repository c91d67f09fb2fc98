//! Cross-validation, scoring and representation-comparison experiments.

mod config;
mod experiment;
mod folds;
mod report;

pub use config::{BaselineConfig, DataConfig, ExperimentConfig, SyntheticConfig, DEFAULT_FOLDS};
pub use experiment::{prepare_data, run_experiment, run_on_dataset, ExperimentOutcome};
pub use folds::{kfold_split, mean, rmse, std_dev, FoldPlan};
pub use report::{
    emit_report, read_report, write_timings, DatasetSummary, EmittedFiles, EvalReport, ReportRow, Timing,
    NO_REPRESENTATION, REPORT_VERSION,
};
