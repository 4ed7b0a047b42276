//! Monte-Carlo sweeps over node counts and strategies, with CSV output and
//! paired post-processing.

pub mod compare;
pub mod config;
pub mod runner;
pub mod table;

pub use compare::{compare_strategies, Metric, PairedSummary, Selector};
pub use config::{ChannelStrategy, ExperimentConfig, PowerStrategy};
pub use runner::{
    run_experiment, run_experiment_with, run_point, AggregateRow, Combo, PointResult, ResultRow,
    ResultTable, RowStatus, Statistic,
};
pub use table::{read_trial_rows, sidecar_path, write_metadata, CsvSink};
