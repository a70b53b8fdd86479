//! Experiment configuration, validation, orchestration, sweeps and file output.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{validate, Experiment, ExperimentConfig, ValidConfig};
pub use output::{fmt17, read_trace, write_columns, write_json, write_run, write_table, TraceTable};
pub use run::{
    damped_mode, gap_check, profile_column, rate_check, residual_column, run_and_write, run_experiment, RateCheck,
    RunOutput, RunSummary, TailReport,
};
pub use sweep::{apply_overrides, combinations, sweep, write_sweep, Axis, SweepRow};
