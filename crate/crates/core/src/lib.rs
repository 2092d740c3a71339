//! Accelerated variance reduced block coordinate descent (AVRBCD) for sparse
//! composite empirical risk minimization
//!
//! ```text
//! min_x  F(x) + P(x),   F(x) = (1/n) Σ_i φ_i(a_iᵀx)
//! ```
//!
//! The crate ships the analyzable full-vector form of the method
//! ([`solvers::reference::Avrbcd1`]), the production form whose inner
//! iterations touch only one block and one sample row
//! ([`solvers::fast::Avrbcd2`]), and the baselines used for comparison
//! (prox-SVRG, MRBCD II/III and Katyusha).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod model;
pub mod record;
pub mod regularizer;
pub mod rng;
pub mod schedule;
pub mod solvers;

pub use dataset::{BlockPartition, SparseDataset};
pub use error::{Error, Result};
pub use model::{ErmModel, LossKind, SmoothnessProfile};
pub use record::{CostCounters, EpochRow, RunRecord};
pub use regularizer::Regularizer;
pub use rng::RngStream;
pub use schedule::{InitMode, Schedule, ScheduleParams, StepRule};
pub use solvers::{ActiveSetGradient, Problem, SnapshotRule, SolverConfig};
