//! Solvers for `min F(x) + P(x)`.
//!
//! [`reference`] holds the full-vector methods (AVRBCD I, Katyusha,
//! prox-SVRG, MRBCD II/III); [`fast`] holds AVRBCD II, whose inner loop never
//! forms a dense vector.

pub mod fast;
pub mod reference;

use std::time::Instant;

use crate::dataset::BlockPartition;
use crate::error::{Error, Result};
use crate::model::{ErmModel, FullGradient, SmoothnessProfile};
use crate::record::{CostCounters, EpochRow, RunRecord};
use crate::regularizer::Regularizer;
use crate::schedule::{InitMode, Schedule, StepRule, PRACTICAL_MULTIPLIER};

/// Composite objective `F(x) + P(x)`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ErmModel,
    pub reg: Regularizer,
}

impl Problem {
    pub fn new(model: ErmModel, reg: Regularizer) -> Self {
        Self { model, reg }
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    /// `F(x) + P(x)`; `x` may carry trailing phantom coordinates.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let x = &x[..self.d()];
        self.model.value(x).expect("dimension checked") + self.reg.eval(x)
    }

    /// `‖L (x − prox_{P/L}(x − ∇F(x)/L))‖`, zero exactly at minimizers.
    pub fn gradient_mapping_norm(&self, x: &[f64], l: f64) -> f64 {
        let x = &x[..self.d()];
        let g = self.model.full_gradient(x).expect("dimension checked").grad;
        let mut p: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / l).collect();
        self.reg.prox_in_place(&mut p, 1.0 / l);
        x.iter().zip(&p).map(|(a, b)| (l * (a - b)).powi(2)).sum::<f64>().sqrt()
    }
}

/// How the next epoch's snapshot is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotRule {
    /// `x̃^{s+1} = x_{sm+σ}` with `σ` uniform on `{1..m}`.
    #[default]
    Random,
    /// `x̃^{s+1} = x_{(s+1)m}`.
    Last,
}

/// What the active-set rule does with `μ` after moving the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActiveSetGradient {
    /// Recompute the full gradient at the moved snapshot (a second pass).
    #[default]
    Recompute,
    /// Keep the full gradient of the pre-step snapshot and refresh only the
    /// snapshot margins. The estimator is then biased by
    /// `∇F(x̃_old) − ∇F(x̃_new)`, which vanishes at a fixed point.
    Reuse,
}

/// Configuration shared by the AVRBCD family (both forms, Katyusha).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Inner iterations per epoch.
    pub m: usize,
    pub epochs: usize,
    /// Mini-batch size; samples are drawn without replacement.
    pub batch: usize,
    pub init: InitMode,
    pub step: StepRule,
    /// Override for `L_Q`; defaults to `L_max`.
    pub l_q: Option<f64>,
    pub snapshot: SnapshotRule,
    /// Proximal step on the snapshot plus block skipping outside its support.
    pub active_set: bool,
    /// Smoothness used by the active-set snapshot step; defaults to `L_max`.
    pub active_set_l: Option<f64>,
    pub active_set_gradient: ActiveSetGradient,
    /// Ceiling on the step size `η`.
    pub eta_cap: Option<f64>,
}

impl SolverConfig {
    /// Theorem-style defaults: proximal initialization, theoretical step.
    pub fn new(m: usize, epochs: usize) -> Self {
        Self {
            m,
            epochs,
            batch: 1,
            init: InitMode::Proximal,
            step: StepRule::Theory,
            l_q: None,
            snapshot: SnapshotRule::Random,
            active_set: false,
            active_set_l: None,
            active_set_gradient: ActiveSetGradient::Recompute,
            eta_cap: None,
        }
    }

    /// Experiment defaults: proximal initialization with `η = 4 / (L_max α₂)`.
    pub fn practical(m: usize, epochs: usize, batch: usize) -> Self {
        Self {
            batch,
            step: StepRule::Practical {
                multiplier: PRACTICAL_MULTIPLIER,
            },
            ..Self::new(m, epochs)
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("inner loop count m must be at least 1".into()));
        }
        if self.batch == 0 || self.batch > n {
            return Err(Error::InvalidParameter(format!("batch size {} not in [1, {n}]", self.batch)));
        }
        Ok(())
    }

    pub(crate) fn schedule(&self, blocks: usize, profile: &SmoothnessProfile) -> Result<Schedule> {
        let s = Schedule::new(self.init, self.step, blocks, profile, self.l_q)?;
        match self.eta_cap {
            Some(cap) => s.with_eta_cap(cap),
            None => Ok(s),
        }
    }
}

/// Final point (length `d`) and per-epoch record of a run.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub x: Vec<f64>,
    pub record: RunRecord,
}

pub(crate) fn check_start(problem: &Problem, x0: &[f64]) -> Result<()> {
    if x0.len() != problem.d() {
        return Err(Error::Dimension {
            expected: problem.d(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// Full gradient at a padded point, returned padded, with the pass counted.
pub(crate) fn padded_full_gradient(
    problem: &Problem,
    partition: &BlockPartition,
    x: &[f64],
    counters: &mut CostCounters,
) -> FullGradient {
    let d = problem.d();
    let mut fg = problem.model.full_gradient(&x[..d]).expect("dimension checked");
    fg.grad.resize(partition.padded_dim(), 0.0);
    counters.coord_grad_evals += (problem.n() * d) as u64;
    counters.full_vector_ops += 1;
    fg
}

/// Proximal step `x̃ ← prox_{P/L}(x̃ − μ/L)` on the snapshot, then the
/// snapshot gradient data for the moved point.
pub(crate) fn active_set_step(
    problem: &Problem,
    partition: &BlockPartition,
    snap: &mut [f64],
    fg: &mut FullGradient,
    l: f64,
    mode: ActiveSetGradient,
    counters: &mut CostCounters,
) {
    for (s, g) in snap.iter_mut().zip(&fg.grad) {
        *s -= g / l;
    }
    problem.reg.prox_in_place(snap, 1.0 / l);
    match mode {
        ActiveSetGradient::Recompute => *fg = padded_full_gradient(problem, partition, snap, counters),
        ActiveSetGradient::Reuse => {
            fg.margins = problem.model.data().margins(snap);
            counters.full_vector_ops += 1;
        }
    }
}

/// Per-epoch recorder. Objective evaluations are not charged to the counters
/// and are excluded from the wall time.
pub(crate) struct EpochRecorder<'a> {
    problem: &'a Problem,
    record: RunRecord,
    elapsed: f64,
    started: Instant,
}

impl<'a> EpochRecorder<'a> {
    pub(crate) fn new(problem: &'a Problem, solver: &str, seed: u64) -> Self {
        Self {
            problem,
            record: RunRecord::new(solver, seed),
            elapsed: 0.0,
            started: Instant::now(),
        }
    }

    pub(crate) fn record(&mut self, epoch: usize, x: &[f64], counters: &CostCounters) {
        self.elapsed += self.started.elapsed().as_secs_f64();
        let objective = self.problem.objective(x);
        self.record.rows.push(EpochRow {
            epoch,
            effective_passes: counters.effective_passes(self.problem.n(), self.problem.d()),
            objective,
            log_suboptimality: None,
            coord_grad_evals: counters.coord_grad_evals,
            wall_time_s: self.elapsed,
        });
        self.record.counter_history.push(*counters);
        self.record.counters = *counters;
        self.started = Instant::now();
    }

    pub(crate) fn finish(self) -> RunRecord {
        self.record
    }
}
