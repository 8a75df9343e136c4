//! Simulation harness: configuration, Monte-Carlo runs and result export.

pub mod config;
pub mod export;
pub mod harness;
pub mod svg;

pub use config::{ExperimentConfig, Fig1Regime, OutputPaths, RecipeKeyword, ThresholdSpec};
pub use export::{read_record, to_csv, to_json, write_outputs, CSV_HEADER};
pub use harness::{
    aggregate, run_monte_carlo, run_trial, run_trial_with_model, spread_statistic, trend_slope, trial_seed, AggregateRecord,
    AggregateSeries, AlgorithmSeries, SpreadStats, TrialRecord,
};
pub use svg::{render_svg, SvgOptions};
