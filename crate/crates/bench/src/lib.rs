//! Benchmark harness for the avrbcd solvers: configuration, synthetic data,
//! reference optima, parallel runs, CSV/SVG output and the self-check suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod optimum;
pub mod plot;
pub mod report;
pub mod runner;
pub mod synth;
pub mod verify;
