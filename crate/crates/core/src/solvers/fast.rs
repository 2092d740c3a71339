//! AVRBCD in the efficient form: an inner step costs `O(nnz(a_i) + Ω)` plus
//! the number of blocks the drawn row touches, never `O(d)`.
//!
//! The iterates are kept relative to the snapshot `ẋ`:
//!
//! ```text
//! z_j = ẋ + ẑ_j
//! x_j = ẋ + ζ_j + γ ẑ_j
//! y_j = ẋ + α₁ ζ_{j−1} + γ ẑ_{j−1}
//! ζ_j = α₁ ζ_{j−1} + (α₂B − γ) Δ_j
//! ```
//!
//! with `γ = α₂ / (1 − α₁)` and `Δ_j` the change of `ẑ` in the updated block.
//! The momentum decay `α₁` of `ζ` is applied lazily: each block stores its
//! value at the last step that touched it plus that step's index, and the
//! pending factor `α₁^(t − last)` is folded in on read. Nothing is ever
//! divided by a decaying product, so no scale factor can underflow.

use crate::dataset::BlockPartition;
use crate::error::Result;
use crate::model::SmoothnessProfile;
use crate::record::CostCounters;
use crate::rng::RngStream;
use crate::schedule::{Schedule, ScheduleParams};

use super::reference::check_partition;
use super::{active_set_step, check_start, padded_full_gradient, EpochRecorder, Problem, SnapshotRule, SolverConfig, SolverOutput};

#[derive(Debug, Clone)]
struct SavedBlock {
    zeta: Vec<f64>,
    last: usize,
    zhat: Vec<f64>,
}

pub struct Avrbcd2<'a> {
    problem: &'a Problem,
    partition: BlockPartition,
    cfg: SolverConfig,
    schedule: Schedule,
    rng: RngStream,
    l_active: f64,
    xhat: Vec<f64>,
    zhat: Vec<f64>,
    /// `ζ` block values as of step `last[l]`.
    zeta: Vec<f64>,
    last: Vec<usize>,
    /// Non-skipped steps taken this epoch.
    t: usize,
    mu: Vec<f64>,
    snap_margins: Vec<f64>,
    zero_block: Vec<bool>,
    sigma: usize,
    sigma_t: Option<usize>,
    saved: Vec<Option<SavedBlock>>,
    j: usize,
    last_block: Option<usize>,
    last_delta: Vec<f64>,
    last_skipped: bool,
    counters: CostCounters,
    batch_buf: Vec<usize>,
    coef_buf: Vec<(usize, f64)>,
    v_buf: Vec<f64>,
}

impl<'a> Avrbcd2<'a> {
    pub fn new(
        problem: &'a Problem,
        partition: BlockPartition,
        profile: &SmoothnessProfile,
        cfg: SolverConfig,
        x0: &[f64],
        rng: RngStream,
    ) -> Result<Self> {
        check_start(problem, x0)?;
        check_partition(problem, &partition)?;
        cfg.validate(problem.n())?;
        let schedule = cfg.schedule(partition.blocks(), profile)?;
        let dim = partition.padded_dim();
        let blocks = partition.blocks();
        let mut xhat = x0.to_vec();
        xhat.resize(dim, 0.0);
        let mut solver = Self {
            problem,
            schedule,
            rng,
            l_active: cfg.active_set_l.unwrap_or(profile.l_max),
            xhat,
            zhat: vec![0.0; dim],
            zeta: vec![0.0; dim],
            last: vec![0; blocks],
            t: 0,
            mu: Vec::new(),
            snap_margins: Vec::new(),
            zero_block: vec![false; blocks],
            sigma: 0,
            sigma_t: None,
            saved: vec![None; blocks],
            j: 0,
            last_block: None,
            last_delta: Vec::with_capacity(partition.block_size()),
            last_skipped: false,
            counters: CostCounters::default(),
            batch_buf: Vec::with_capacity(cfg.batch),
            coef_buf: Vec::with_capacity(cfg.batch),
            v_buf: Vec::with_capacity(partition.block_size()),
            partition,
            cfg,
        };
        solver.begin_epoch();
        Ok(solver)
    }

    fn begin_epoch(&mut self) {
        let mut fg = padded_full_gradient(self.problem, &self.partition, &self.xhat, &mut self.counters);
        if self.cfg.active_set {
            // move the snapshot, shifting ẑ and ζ so that x and z stay put
            let old = self.xhat.clone();
            let mode = self.cfg.active_set_gradient;
            active_set_step(self.problem, &self.partition, &mut self.xhat, &mut fg, self.l_active, mode, &mut self.counters);
            let gamma = self.schedule.params().gamma;
            for (k, o) in old.iter().enumerate() {
                let delta = self.xhat[k] - o;
                self.zhat[k] -= delta;
                self.zeta[k] -= (1.0 - gamma) * delta;
            }
            self.counters.full_vector_ops += 1;
        }
        self.mu = fg.grad;
        self.snap_margins = fg.margins;
        if self.cfg.active_set {
            for (l, range) in self.partition.ranges().enumerate() {
                self.zero_block[l] = self.xhat[range].iter().all(|&v| v == 0.0);
            }
        }
        self.sigma = match self.cfg.snapshot {
            SnapshotRule::Random => self.rng.snapshot(self.cfg.m),
            SnapshotRule::Last => self.cfg.m,
        };
        self.sigma_t = None;
        for s in self.saved.iter_mut() {
            *s = None;
        }
        self.j = 0;
    }

    #[inline]
    fn decay(&self, steps: usize) -> f64 {
        powi_steps(self.schedule.params().alpha1, steps)
    }

    /// `a_iᵀ y` for the upcoming step, from the stored offsets.
    fn margin_y(&self, i: usize) -> f64 {
        let ds = self.problem.model.data();
        let gamma = self.schedule.params().gamma;
        let (idx, val) = ds.row(i);
        let bs = self.partition.block_size();
        let mut acc = 0.0;
        let mut cur_block = usize::MAX;
        let mut factor = 0.0;
        for (&c, &a) in idx.iter().zip(val) {
            let c = c as usize;
            let b = c / bs;
            if b != cur_block {
                cur_block = b;
                factor = self.decay(self.t - self.last[b] + 1);
            }
            acc += a * (factor * self.zeta[c] + gamma * self.zhat[c]);
        }
        acc + self.snap_margins[i]
    }

    /// One inner iteration. Returns `false` once the epoch's `m` steps are done.
    pub fn step(&mut self) -> bool {
        if self.j >= self.cfg.m {
            return false;
        }
        self.j += 1;
        let p = *self.schedule.params();
        let n = self.problem.n();
        let blocks = self.partition.blocks();

        self.rng.sample_batch(n, self.cfg.batch, &mut self.batch_buf);
        let l = self.rng.block(blocks);
        self.last_block = Some(l);
        self.counters.inner_steps += 1;

        if self.cfg.active_set && self.zero_block[l] {
            self.counters.skipped_steps += 1;
            self.last_skipped = true;
            self.last_delta.clear();
            self.checkpoint();
            return true;
        }
        self.last_skipped = false;

        let model = &self.problem.model;
        let ds = model.data();
        let inv_b = 1.0 / self.batch_buf.len() as f64;
        let mut coefs = std::mem::take(&mut self.coef_buf);
        coefs.clear();
        for &i in &self.batch_buf {
            let my = self.margin_y(i);
            coefs.push((i, (model.deriv(i, my) - model.deriv(i, self.snap_margins[i])) * inv_b));
        }

        let range = self.partition.range(l);
        let start = range.start;
        let mut v = std::mem::take(&mut self.v_buf);
        v.clear();
        v.extend_from_slice(&self.mu[range.clone()]);
        for &(i, coef) in &coefs {
            let (idx, val) = ds.row_segment(i, range.clone());
            self.counters.coord_grad_evals += idx.len() as u64;
            self.counters.inner_work += (ds.row_nnz(i) + idx.len()) as u64;
            for (&c, &a) in idx.iter().zip(val) {
                v[c as usize - start] += coef * a;
            }
        }
        self.coef_buf = coefs;
        self.counters.inner_work += 2 * self.partition.block_size() as u64;

        let lagged = self.decay(self.t - self.last[l] + 1);
        let l2 = model.lambda2();
        if l2 > 0.0 {
            for (k, c) in range.clone().enumerate() {
                if !self.partition.is_phantom(c) {
                    v[k] += l2 * (lagged * self.zeta[c] + p.gamma * self.zhat[c]);
                }
            }
        }

        // z block: prox of (ẋ + ẑ − η v)
        for (k, c) in range.clone().enumerate() {
            v[k] = self.xhat[c] + self.zhat[c] - p.eta * v[k];
        }
        self.problem.reg.prox_in_place(&mut v, p.eta);

        if self.sigma_t.is_some() && self.saved[l].is_none() {
            self.saved[l] = Some(SavedBlock {
                zeta: self.zeta[range.clone()].to_vec(),
                last: self.last[l],
                zhat: self.zhat[range.clone()].to_vec(),
            });
        }

        let b = blocks as f64;
        let coupling = p.alpha2 * b - p.gamma;
        let decay = self.decay(self.t + 1 - self.last[l]);
        self.last_delta.clear();
        for (k, c) in range.enumerate() {
            let zhat_new = v[k] - self.xhat[c];
            let delta = zhat_new - self.zhat[c];
            self.zhat[c] = zhat_new;
            self.zeta[c] = decay * self.zeta[c] + coupling * delta;
            self.last_delta.push(delta);
        }
        self.v_buf = v;
        self.t += 1;
        self.last[l] = self.t;
        self.counters.block_touches += 1;
        self.checkpoint();
        true
    }

    fn checkpoint(&mut self) {
        if self.j == self.sigma && self.sigma < self.cfg.m {
            self.sigma_t = Some(self.t);
        }
    }

    /// `x` at the checkpointed step `σ`.
    fn x_at_sigma(&self) -> Vec<f64> {
        let Some(ts) = self.sigma_t else {
            return self.x();
        };
        let a1 = self.schedule.params().alpha1;
        let gamma = self.schedule.params().gamma;
        let mut out = self.xhat.clone();
        for (l, range) in self.partition.ranges().enumerate() {
            let start = range.start;
            match &self.saved[l] {
                Some(sb) => {
                    let f = powi_steps(a1, ts - sb.last);
                    for c in range {
                        out[c] += f * sb.zeta[c - start] + gamma * sb.zhat[c - start];
                    }
                }
                None => {
                    let f = powi_steps(a1, ts - self.last[l]);
                    for c in range {
                        out[c] += f * self.zeta[c] + gamma * self.zhat[c];
                    }
                }
            }
        }
        out
    }

    /// Finishes the epoch, installs the new snapshot, advances the schedule
    /// and re-centers the offsets on it.
    pub fn end_epoch(&mut self) {
        self.finish_epoch();
        self.begin_epoch();
    }

    fn finish_epoch(&mut self) {
        while self.step() {}
        let x_m = self.x();
        let z_m = self.z();
        let new_snap = if self.sigma_t.is_some() { self.x_at_sigma() } else { x_m.clone() };
        self.schedule.advance();
        let gamma = self.schedule.params().gamma;
        for k in 0..new_snap.len() {
            self.zhat[k] = z_m[k] - new_snap[k];
            self.zeta[k] = x_m[k] - new_snap[k] - gamma * self.zhat[k];
        }
        self.xhat = new_snap;
        self.last.iter_mut().for_each(|v| *v = 0);
        self.t = 0;
        self.counters.full_vector_ops += 1;
    }

    /// Rows are recorded before the next snapshot gradient is paid for.
    pub fn run_epochs(mut self, name: &str) -> SolverOutput {
        let mut rec = EpochRecorder::new(self.problem, name, self.rng.seed());
        for s in 0..self.cfg.epochs {
            if s > 0 {
                self.begin_epoch();
            }
            self.finish_epoch();
            rec.record(s + 1, &self.xhat, &self.counters);
        }
        let mut x = self.xhat;
        x.truncate(self.problem.d());
        SolverOutput { x, record: rec.finish() }
    }

    /// Dense `ζ` (the lazily decayed offset), padded.
    pub fn offset(&self) -> Vec<f64> {
        let a1 = self.schedule.params().alpha1;
        let mut out = self.zeta.clone();
        for (l, range) in self.partition.ranges().enumerate() {
            let f = powi_steps(a1, self.t - self.last[l]);
            out[range].iter_mut().for_each(|v| *v *= f);
        }
        out
    }

    /// Dense `x`, padded. Not charged to the counters.
    pub fn x(&self) -> Vec<f64> {
        let gamma = self.schedule.params().gamma;
        let off = self.offset();
        (0..off.len()).map(|k| self.xhat[k] + off[k] + gamma * self.zhat[k]).collect()
    }

    /// Dense `z`, padded. Not charged to the counters.
    pub fn z(&self) -> Vec<f64> {
        self.xhat.iter().zip(&self.zhat).map(|(a, b)| a + b).collect()
    }

    pub fn snapshot(&self) -> &[f64] {
        &self.xhat
    }
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
    pub fn params(&self) -> &ScheduleParams {
        self.schedule.params()
    }
    pub fn counters(&self) -> &CostCounters {
        &self.counters
    }
    pub fn inner_index(&self) -> usize {
        self.j
    }
    pub fn last_block(&self) -> Option<usize> {
        self.last_block
    }
    /// Change of `z` in the last updated block; empty after a skipped step.
    pub fn last_delta(&self) -> &[f64] {
        &self.last_delta
    }
    pub fn last_skipped(&self) -> bool {
        self.last_skipped
    }
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }
}

fn powi_steps(a: f64, e: usize) -> f64 {
    if e == 0 {
        1.0
    } else {
        a.powi(e.min(i32::MAX as usize) as i32)
    }
}

pub fn avrbcd2_run(
    problem: &Problem,
    partition: BlockPartition,
    profile: &SmoothnessProfile,
    cfg: SolverConfig,
    x0: &[f64],
    rng: RngStream,
) -> Result<SolverOutput> {
    let name = if cfg.active_set { "avrbcd-ac" } else { "avrbcd" };
    Ok(Avrbcd2::new(problem, partition, profile, cfg, x0, rng)?.run_epochs(name))
}
