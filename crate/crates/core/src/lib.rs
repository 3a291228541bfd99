//! Group-sparse input selection for feed-forward networks.
//!
//! Input features are partitioned into groups. Training alternates over the
//! groups, updating one first-layer block at a time under a group-norm
//! penalty, and permanently disconnects a group once removing it costs less
//! loss, on average, than the penalty weight `λ`.

pub mod data;
pub mod error;
pub mod grouping;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod optim;

pub use data::Dataset;
pub use error::{Error, Result};
pub use grouping::{GroupPartition, SparsityMask};
pub use loss::{LossKind, LossSpec};
pub use matrix::Matrix;
pub use metrics::{DecisionRule, EvalReport};
pub use nn::{Activation, Network};
pub use optim::{train, Algorithm, EpochTrace, GroupPass, PruneThreshold, TrainConfig, TrainOutcome, Trainer};
