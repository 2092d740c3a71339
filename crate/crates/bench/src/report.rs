//! CSV output and seed averaging.
//!
//! Two schemas are written. The per-run file keeps every recorded row and
//! parses back into identical [`RunRecord`]s; the per-solver curve file holds
//! the pointwise mean and standard deviation of log-suboptimality.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use avrbcd::{CostCounters, EpochRow, RunRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Log-suboptimality assigned to rows that sit within `1e-15` of the
/// reference value when averaging.
pub const LOG_FLOOR: f64 = -15.0;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{solver}: run with seed {seed} has epochs {got:?}, expected {expected:?}")]
    GridMismatch {
        solver: String,
        seed: u64,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("malformed run file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunRow {
    solver: String,
    seed: u64,
    config_hash: String,
    epoch: usize,
    effective_passes: f64,
    objective: f64,
    log_suboptimality: Option<f64>,
    coord_grad_evals: u64,
    wall_time_s: f64,
    block_touches: u64,
    full_vector_ops: u64,
    inner_work: u64,
    inner_steps: u64,
    skipped_steps: u64,
}

/// One point of an averaged curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub effective_passes: f64,
    pub mean_log_subopt: f64,
    pub std: f64,
    pub runs: usize,
}

/// Seed average for one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub solver: String,
    pub points: Vec<CurvePoint>,
    /// Seeds whose runs diverged and were left out.
    pub failed: Vec<u64>,
}

impl Curve {
    /// First averaged point at or below `target` log-suboptimality.
    pub fn passes_to(&self, target: f64) -> Option<f64> {
        self.points.iter().find(|p| p.mean_log_subopt <= target).map(|p| p.effective_passes)
    }
}

/// Pointwise mean and sample standard deviation over the non-diverged runs.
/// Every run must record the same epochs; rows without a log-suboptimality
/// value count as [`LOG_FLOOR`].
pub fn aggregate(solver: &str, runs: &[RunRecord]) -> Result<Curve, ReportError> {
    let (ok, bad): (Vec<&RunRecord>, Vec<&RunRecord>) = runs.iter().partition(|r| !r.diverged());
    let failed = bad.iter().map(|r| r.seed).collect();
    let Some(first) = ok.first() else {
        return Ok(Curve {
            solver: solver.into(),
            points: Vec::new(),
            failed,
        });
    };
    let grid: Vec<usize> = first.rows.iter().map(|r| r.epoch).collect();
    for r in &ok {
        let got: Vec<usize> = r.rows.iter().map(|row| row.epoch).collect();
        if got != grid {
            return Err(ReportError::GridMismatch {
                solver: solver.into(),
                seed: r.seed,
                expected: grid,
                got,
            });
        }
    }
    let k = ok.len() as f64;
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &epoch)| {
            let logs: Vec<f64> = ok.iter().map(|r| r.rows[i].log_suboptimality.unwrap_or(LOG_FLOOR).max(LOG_FLOOR)).collect();
            let mean = logs.iter().sum::<f64>() / k;
            let std = if ok.len() > 1 {
                (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            CurvePoint {
                epoch,
                effective_passes: ok.iter().map(|r| r.rows[i].effective_passes).sum::<f64>() / k,
                mean_log_subopt: mean,
                std,
                runs: ok.len(),
            }
        })
        .collect();
    Ok(Curve {
        solver: solver.into(),
        points,
        failed,
    })
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    epoch: usize,
    effective_passes: f64,
    mean_log_subopt: f64,
    std: f64,
    runs: usize,
    config_hash: String,
}

pub fn write_curve<W: Write>(out: W, curve: &Curve, config_hash: &str) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    if curve.points.is_empty() {
        w.write_record(["epoch", "effective_passes", "mean_log_subopt", "std", "runs", "config_hash"])?;
    }
    for p in &curve.points {
        w.serialize(CurveRow {
            epoch: p.epoch,
            effective_passes: p.effective_passes,
            mean_log_subopt: p.mean_log_subopt,
            std: p.std,
            runs: p.runs,
            config_hash: config_hash.into(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(input: R) -> Result<Vec<CurvePoint>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CurveRow>()
        .map(|row| {
            let row = row?;
            Ok(CurvePoint {
                epoch: row.epoch,
                effective_passes: row.effective_passes,
                mean_log_subopt: row.mean_log_subopt,
                std: row.std,
                runs: row.runs,
            })
        })
        .collect()
}

pub fn write_runs<W: Write>(out: W, runs: &[RunRecord]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for run in runs {
        if run.counter_history.len() != run.rows.len() {
            return Err(ReportError::Malformed(format!("{} seed {}: counter history length", run.solver, run.seed)));
        }
        for (row, c) in run.rows.iter().zip(&run.counter_history) {
            w.serialize(RunRow {
                solver: run.solver.clone(),
                seed: run.seed,
                config_hash: run.config_hash.clone(),
                epoch: row.epoch,
                effective_passes: row.effective_passes,
                objective: row.objective,
                log_suboptimality: row.log_suboptimality,
                coord_grad_evals: row.coord_grad_evals,
                wall_time_s: row.wall_time_s,
                block_touches: c.block_touches,
                full_vector_ops: c.full_vector_ops,
                inner_work: c.inner_work,
                inner_steps: c.inner_steps,
                skipped_steps: c.skipped_steps,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_runs`]; consecutive rows with the same solver and seed
/// form one record. Runs with no recorded rows are not representable.
pub fn read_runs<R: Read>(input: R) -> Result<Vec<RunRecord>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<RunRecord> = Vec::new();
    for row in r.deserialize::<RunRow>() {
        let row = row?;
        let same = out.last().is_some_and(|run| run.solver == row.solver && run.seed == row.seed && run.config_hash == row.config_hash);
        if !same {
            let mut run = RunRecord::new(row.solver.clone(), row.seed);
            run.config_hash = row.config_hash.clone();
            out.push(run);
        }
        let run = out.last_mut().expect("pushed above");
        let c = CostCounters {
            coord_grad_evals: row.coord_grad_evals,
            block_touches: row.block_touches,
            full_vector_ops: row.full_vector_ops,
            inner_work: row.inner_work,
            inner_steps: row.inner_steps,
            skipped_steps: row.skipped_steps,
        };
        run.rows.push(EpochRow {
            epoch: row.epoch,
            effective_passes: row.effective_passes,
            objective: row.objective,
            log_suboptimality: row.log_suboptimality,
            coord_grad_evals: row.coord_grad_evals,
            wall_time_s: row.wall_time_s,
        });
        run.counter_history.push(c);
        run.counters = c;
    }
    Ok(out)
}

pub fn write_curve_file(path: &Path, curve: &Curve, config_hash: &str) -> Result<(), ReportError> {
    write_curve(File::create(path)?, curve, config_hash)
}

pub fn write_runs_file(path: &Path, runs: &[RunRecord]) -> Result<(), ReportError> {
    write_runs(File::create(path)?, runs)
}
