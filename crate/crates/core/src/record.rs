//! Cost accounting and per-epoch run records.

/// Work counters accumulated by a solver run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    /// Component partial-gradient coordinates evaluated. A full gradient
    /// counts `n·d`; an inner step counts the nonzeros of the drawn rows
    /// inside the updated coordinates.
    pub coord_grad_evals: u64,
    /// Block updates performed.
    pub block_touches: u64,
    /// Dense O(d) passes.
    pub full_vector_ops: u64,
    /// Scalar elements read or written by inner iterations (row entries plus
    /// block entries), the quantity the per-iteration cost bound is about.
    pub inner_work: u64,
    pub inner_steps: u64,
    /// Inner steps skipped by the active-set rule.
    pub skipped_steps: u64,
}

impl CostCounters {
    pub fn effective_passes(&self, n: usize, d: usize) -> f64 {
        effective_passes(self, n, d)
    }
}

/// `coord_grad_evals / (n·d)`.
pub fn effective_passes(counters: &CostCounters, n: usize, d: usize) -> f64 {
    counters.coord_grad_evals as f64 / (n as f64 * d as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub effective_passes: f64,
    pub objective: f64,
    /// `log₁₀(F^P(x) − F^P(x*))`, filled in once a reference optimum is known.
    pub log_suboptimality: Option<f64>,
    pub coord_grad_evals: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub solver: String,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<EpochRow>,
    pub counters: CostCounters,
    /// Per-epoch counter snapshots (same length as `rows`).
    pub counter_history: Vec<CostCounters>,
}

impl RunRecord {
    pub fn new(solver: impl Into<String>, seed: u64) -> Self {
        Self {
            solver: solver.into(),
            seed,
            ..Default::default()
        }
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    /// True when any recorded objective is NaN or infinite.
    pub fn diverged(&self) -> bool {
        self.rows.iter().any(|r| !r.objective.is_finite())
    }

    /// Fills `log_suboptimality` against a reference value; rows within
    /// `1e-15` of it stay `None`.
    pub fn set_reference(&mut self, optimum: f64) {
        for r in &mut self.rows {
            let gap = r.objective - optimum;
            r.log_suboptimality = (gap > 1e-15).then(|| gap.log10());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_arithmetic() {
        let c = CostCounters {
            coord_grad_evals: 100 * 10,
            ..Default::default()
        };
        assert_eq!(effective_passes(&c, 100, 10), 1.0);
        let c = CostCounters {
            coord_grad_evals: 3,
            ..Default::default()
        };
        assert_eq!(c.effective_passes(100, 10), 3.0 / 1000.0);
    }

    #[test]
    fn reference_fills_log_gap() {
        let mut r = RunRecord::new("x", 0);
        for (e, obj) in [1.5, 1.0 + 1e-3, 1.0].into_iter().enumerate() {
            r.rows.push(EpochRow {
                epoch: e + 1,
                effective_passes: e as f64 + 1.0,
                objective: obj,
                log_suboptimality: None,
                coord_grad_evals: 0,
                wall_time_s: 0.0,
            });
        }
        r.set_reference(1.0);
        assert_eq!(r.rows[0].log_suboptimality, Some(0.5f64.log10()));
        assert!((r.rows[1].log_suboptimality.unwrap() + 3.0).abs() < 1e-9);
        assert_eq!(r.rows[2].log_suboptimality, None);
        assert!(!r.diverged());
    }
}
