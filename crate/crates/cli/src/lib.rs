//! Experiment drivers behind the `grpsparse` binary: a JSON run
//! configuration plus `train`, `sweep`, `stability` and `eval` commands that
//! write metrics, traces and snapshots to an output directory.

pub mod config;
pub mod error;
pub mod run;

pub use config::{DataConfig, DatasetSpec, LossConfig, MnistFeatures, OutputConfig, RunConfig, Splits};
pub use error::{CliError, Result};
pub use run::{
    cmd_eval, cmd_stability, cmd_sweep, cmd_train, derive_seed, parse_lambdas, EvalOutput, GroupSummary,
    StabilityReport, SweepResult, SweepRow, TrainReport,
};
