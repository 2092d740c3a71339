//! Full-vector reference solvers.
//!
//! [`Avrbcd1`] follows the analyzable form of AVRBCD line by line and is the
//! oracle for [`super::fast::Avrbcd2`]. The baselines (Katyusha opt. II,
//! prox-SVRG, MRBCD II/III) share its draw streams so paired runs are
//! comparable draw for draw.

use crate::dataset::BlockPartition;
use crate::error::{Error, Result};
use crate::model::SmoothnessProfile;
use crate::record::CostCounters;
use crate::rng::RngStream;
use crate::schedule::{Schedule, ScheduleParams};

use super::{active_set_step, check_start, ActiveSetGradient, padded_full_gradient, EpochRecorder, Problem, SnapshotRule, SolverConfig, SolverOutput};

/// AVRBCD in its full-vector form:
///
/// ```text
/// y_k = α₁ x_{k−1} + α₂ z_{k−1} + α₃ x̃ˢ
/// [z_k]_l = prox_{ηP_l}([z_{k−1} − η v_k]_l),  v_k = μˢ + ∇f_i(y_k) − ∇f_i(x̃ˢ)
/// x_k = y_k + α₂ B (z_k − z_{k−1})
/// ```
pub struct Avrbcd1<'a> {
    problem: &'a Problem,
    partition: BlockPartition,
    cfg: SolverConfig,
    schedule: Schedule,
    rng: RngStream,
    l_active: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    snap: Vec<f64>,
    mu: Vec<f64>,
    snap_margins: Vec<f64>,
    zero_block: Vec<bool>,
    x_sigma: Option<Vec<f64>>,
    sigma: usize,
    j: usize,
    last_block: Option<usize>,
    last_skipped: bool,
    counters: CostCounters,
    batch_buf: Vec<usize>,
    coef_buf: Vec<(usize, f64)>,
}

impl<'a> Avrbcd1<'a> {
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
        let mut x = x0.to_vec();
        x.resize(partition.padded_dim(), 0.0);
        let mut solver = Self {
            problem,
            partition,
            cfg,
            schedule,
            rng,
            l_active: cfg.active_set_l.unwrap_or(profile.l_max),
            y: x.clone(),
            z: x.clone(),
            snap: x.clone(),
            x,
            mu: Vec::new(),
            snap_margins: Vec::new(),
            zero_block: vec![false; partition.blocks()],
            x_sigma: None,
            sigma: 0,
            j: 0,
            last_block: None,
            last_skipped: false,
            counters: CostCounters::default(),
            batch_buf: Vec::with_capacity(cfg.batch),
            coef_buf: Vec::with_capacity(cfg.batch),
        };
        solver.begin_epoch();
        Ok(solver)
    }

    fn begin_epoch(&mut self) {
        let mut fg = padded_full_gradient(self.problem, &self.partition, &self.snap, &mut self.counters);
        if self.cfg.active_set {
            let mode = self.cfg.active_set_gradient;
            active_set_step(self.problem, &self.partition, &mut self.snap, &mut fg, self.l_active, mode, &mut self.counters);
        }
        self.mu = fg.grad;
        self.snap_margins = fg.margins;
        if self.cfg.active_set {
            for (l, range) in self.partition.ranges().enumerate() {
                self.zero_block[l] = self.snap[range].iter().all(|&v| v == 0.0);
            }
        }
        self.sigma = match self.cfg.snapshot {
            SnapshotRule::Random => self.rng.snapshot(self.cfg.m),
            SnapshotRule::Last => self.cfg.m,
        };
        self.x_sigma = None;
        self.j = 0;
    }

    /// One inner iteration. Returns `false` once the epoch's `m` steps are done.
    pub fn step(&mut self) -> bool {
        if self.j >= self.cfg.m {
            return false;
        }
        self.j += 1;
        let p = *self.schedule.params();
        let ds = self.problem.model.data();
        let b = self.partition.blocks() as f64;
        let n = ds.n();

        self.rng.sample_batch(n, self.cfg.batch, &mut self.batch_buf);
        let l = self.rng.block(self.partition.blocks());
        self.last_block = Some(l);
        self.counters.inner_steps += 1;

        if self.cfg.active_set && self.zero_block[l] {
            // skipped iterations leave x and z untouched
            self.counters.skipped_steps += 1;
            self.last_skipped = true;
            self.y.copy_from_slice(&self.x);
            self.capture_sigma();
            return true;
        }
        self.last_skipped = false;

        for ((yk, (&xk, &zk)), &sk) in self.y.iter_mut().zip(self.x.iter().zip(&self.z)).zip(&self.snap) {
            *yk = p.alpha1 * xk + p.alpha2 * zk + p.alpha3 * sk;
        }
        self.counters.full_vector_ops += 1;

        let inv_b = 1.0 / self.batch_buf.len() as f64;
        self.coef_buf.clear();
        for &i in &self.batch_buf {
            let my = ds.row_dot(i, &self.y);
            let coef = (self.problem.model.deriv(i, my) - self.problem.model.deriv(i, self.snap_margins[i])) * inv_b;
            self.coef_buf.push((i, coef));
        }
        let range = self.partition.range(l);
        let v = block_gradient(self.problem, &self.partition, l, &self.mu, &self.coef_buf, &self.y, &self.snap, &mut self.counters);

        let eta = p.eta;
        let mut znew: Vec<f64> = self.z[range.clone()].iter().zip(&v).map(|(z, g)| z - eta * g).collect();
        self.problem.reg.prox_in_place(&mut znew, eta);
        self.x.copy_from_slice(&self.y);
        for (k, c) in range.enumerate() {
            let delta = znew[k] - self.z[c];
            self.x[c] += p.alpha2 * b * delta;
            self.z[c] = znew[k];
        }
        self.counters.block_touches += 1;
        self.capture_sigma();
        true
    }

    fn capture_sigma(&mut self) {
        if self.j == self.sigma {
            self.x_sigma = Some(self.x.clone());
        }
    }

    /// Finishes the epoch (runs any remaining inner steps), installs the new
    /// snapshot, advances the schedule and refreshes `μ`.
    pub fn end_epoch(&mut self) {
        self.finish_epoch();
        self.begin_epoch();
    }

    fn finish_epoch(&mut self) {
        while self.step() {}
        self.snap = self.x_sigma.take().expect("sigma in 1..=m");
        self.schedule.advance();
    }

    /// Rows are recorded before the next snapshot gradient is paid for, so
    /// epoch `s` reports `s` full gradients.
    pub fn run_epochs(mut self, name: &str) -> SolverOutput {
        let mut rec = EpochRecorder::new(self.problem, name, self.rng.seed());
        for s in 0..self.cfg.epochs {
            if s > 0 {
                self.begin_epoch();
            }
            self.finish_epoch();
            rec.record(s + 1, &self.snap, &self.counters);
        }
        let mut x = self.snap;
        x.truncate(self.problem.d());
        SolverOutput { x, record: rec.finish() }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }
    pub fn snapshot(&self) -> &[f64] {
        &self.snap
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
    pub fn last_skipped(&self) -> bool {
        self.last_skipped
    }
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }
}

pub(crate) fn check_partition(problem: &Problem, partition: &BlockPartition) -> Result<()> {
    if partition.dim() != problem.d() {
        return Err(Error::Dimension {
            expected: problem.d(),
            got: partition.dim(),
        });
    }
    Ok(())
}

/// `[μ]_l + Σ_batch coef_i [a_i]_l (+ λ₂([y]_l − [x̃]_l))` for padded dense `y`, `x̃`.
#[allow(clippy::too_many_arguments)]
fn block_gradient(
    problem: &Problem,
    partition: &BlockPartition,
    l: usize,
    mu: &[f64],
    coefs: &[(usize, f64)],
    y: &[f64],
    snap: &[f64],
    counters: &mut CostCounters,
) -> Vec<f64> {
    let ds = problem.model.data();
    let range = partition.range(l);
    let start = range.start;
    let mut v = mu[range.clone()].to_vec();
    for &(i, coef) in coefs {
        let (idx, val) = ds.row_segment(i, range.clone());
        counters.coord_grad_evals += idx.len() as u64;
        counters.inner_work += (ds.row_nnz(i) + idx.len()) as u64;
        for (&j, &a) in idx.iter().zip(val) {
            v[j as usize - start] += coef * a;
        }
    }
    let l2 = problem.model.lambda2();
    if l2 > 0.0 {
        for (k, c) in range.enumerate() {
            if !partition.is_phantom(c) {
                v[k] += l2 * (y[c] - snap[c]);
            }
        }
    }
    counters.inner_work += 2 * partition.block_size() as u64;
    v
}

pub fn avrbcd1_run(
    problem: &Problem,
    partition: BlockPartition,
    profile: &SmoothnessProfile,
    cfg: SolverConfig,
    x0: &[f64],
    rng: RngStream,
) -> Result<SolverOutput> {
    Ok(Avrbcd1::new(problem, partition, profile, cfg, x0, rng)?.run_epochs("avrbcd1"))
}

/// Katyusha (opt. II) in the AVRBCD parameterization with a single block.
///
/// Written directly on full vectors, with no block bookkeeping, so that it is
/// an independent check of the `B = 1` case of [`Avrbcd1`]. `profile` must be
/// the single-block profile.
pub fn katyusha_run(problem: &Problem, profile: &SmoothnessProfile, cfg: SolverConfig, x0: &[f64], mut rng: RngStream) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    cfg.validate(problem.n())?;
    let ds = problem.model.data();
    let n = ds.n();
    let l2 = problem.model.lambda2();
    let partition = BlockPartition::new(problem.d(), 1)?;
    let mut schedule = cfg.schedule(1, profile)?;
    let l_active = cfg.active_set_l.unwrap_or(profile.l_max);
    let mut counters = CostCounters::default();
    let mut rec = EpochRecorder::new(problem, "katyusha", rng.seed());

    let mut x = x0.to_vec();
    let mut z = x.clone();
    let mut snap = x.clone();
    let mut y = vec![0.0; x.len()];
    let mut batch = Vec::with_capacity(cfg.batch);

    for s in 0..cfg.epochs {
        let p = *schedule.params();
        let mut fg = padded_full_gradient(problem, &partition, &snap, &mut counters);
        if cfg.active_set {
            active_set_step(problem, &partition, &mut snap, &mut fg, l_active, cfg.active_set_gradient, &mut counters);
        }
        let sigma = match cfg.snapshot {
            SnapshotRule::Random => rng.snapshot(cfg.m),
            SnapshotRule::Last => cfg.m,
        };
        let mut x_sigma = None;
        for j in 1..=cfg.m {
            rng.sample_batch(n, cfg.batch, &mut batch);
            counters.inner_steps += 1;
            for k in 0..x.len() {
                y[k] = p.alpha1 * x[k] + p.alpha2 * z[k] + p.alpha3 * snap[k];
            }
            let mut v = fg.grad.clone();
            let inv_b = 1.0 / batch.len() as f64;
            for &i in &batch {
                let coef = (problem.model.deriv(i, ds.row_dot(i, &y)) - problem.model.deriv(i, fg.margins[i])) * inv_b;
                let (idx, val) = ds.row(i);
                counters.coord_grad_evals += idx.len() as u64;
                for (&c, &a) in idx.iter().zip(val) {
                    v[c as usize] += coef * a;
                }
            }
            if l2 > 0.0 {
                for k in 0..v.len() {
                    v[k] += l2 * (y[k] - snap[k]);
                }
            }
            let mut znew: Vec<f64> = z.iter().zip(&v).map(|(zk, g)| zk - p.eta * g).collect();
            problem.reg.prox_in_place(&mut znew, p.eta);
            for k in 0..x.len() {
                x[k] = y[k] + p.alpha2 * (znew[k] - z[k]);
            }
            z = znew;
            counters.full_vector_ops += 1;
            counters.block_touches += 1;
            if j == sigma {
                x_sigma = Some(x.clone());
            }
        }
        snap = x_sigma.expect("sigma in 1..=m");
        schedule.advance();
        rec.record(s + 1, &snap, &counters);
    }
    Ok(SolverOutput { x: snap, record: rec.finish() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrgConfig {
    pub m: usize,
    pub eta: f64,
    pub epochs: usize,
    pub batch: usize,
}

/// Proximal SVRG: `x ← prox_{ηP}(x − η v)` with the full-dimensional mixed
/// gradient; the snapshot is the last inner iterate.
pub fn svrg_run(problem: &Problem, cfg: SvrgConfig, x0: &[f64], mut rng: RngStream) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    check_step(cfg.eta, cfg.m, cfg.batch, problem.n())?;
    let ds = problem.model.data();
    let n = ds.n();
    let l2 = problem.model.lambda2();
    let partition = BlockPartition::new(problem.d(), 1)?;
    let mut counters = CostCounters::default();
    let mut rec = EpochRecorder::new(problem, "svrg", rng.seed());
    let mut x = x0.to_vec();
    let mut batch = Vec::with_capacity(cfg.batch);
    let mut v = vec![0.0; x.len()];

    for s in 0..cfg.epochs {
        let snap = x.clone();
        let fg = padded_full_gradient(problem, &partition, &snap, &mut counters);
        for _ in 0..cfg.m {
            rng.sample_batch(n, cfg.batch, &mut batch);
            counters.inner_steps += 1;
            v.copy_from_slice(&fg.grad);
            let inv_b = 1.0 / batch.len() as f64;
            for &i in &batch {
                let coef = (problem.model.deriv(i, ds.row_dot(i, &x)) - problem.model.deriv(i, fg.margins[i])) * inv_b;
                let (idx, val) = ds.row(i);
                counters.coord_grad_evals += idx.len() as u64;
                for (&c, &a) in idx.iter().zip(val) {
                    v[c as usize] += coef * a;
                }
            }
            for k in 0..x.len() {
                let g = if l2 > 0.0 { v[k] + l2 * (x[k] - snap[k]) } else { v[k] };
                x[k] -= cfg.eta * g;
            }
            problem.reg.prox_in_place(&mut x, cfg.eta);
            counters.full_vector_ops += 1;
        }
        rec.record(s + 1, &x, &counters);
    }
    Ok(SolverOutput { x, record: rec.finish() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrbcdConfig {
    pub m: usize,
    pub eta: f64,
    pub epochs: usize,
    pub batch: usize,
    /// MRBCD III: proximal snapshot step and block skipping.
    pub active_set: bool,
    /// Smoothness for the snapshot step; defaults to `L_max` when `None`.
    pub active_set_l: Option<f64>,
    pub active_set_gradient: ActiveSetGradient,
}

/// MRBCD II (and III with `active_set`): variance-reduced randomized block
/// coordinate descent with a constant step and no momentum,
/// `[x]_l ← prox_{ηP_l}([x − η v]_l)`. The snapshot is the last iterate.
///
/// Only the updated block and the drawn rows are touched per step.
pub fn mrbcd_run(
    problem: &Problem,
    partition: BlockPartition,
    profile: &SmoothnessProfile,
    cfg: MrbcdConfig,
    x0: &[f64],
    mut rng: RngStream,
) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    check_partition(problem, &partition)?;
    check_step(cfg.eta, cfg.m, cfg.batch, problem.n())?;
    let ds = problem.model.data();
    let n = ds.n();
    let blocks = partition.blocks();
    let l_active = cfg.active_set_l.unwrap_or(profile.l_max);
    let mut counters = CostCounters::default();
    let name = if cfg.active_set { "mrbcd3" } else { "mrbcd2" };
    let mut rec = EpochRecorder::new(problem, name, rng.seed());
    let mut x = x0.to_vec();
    x.resize(partition.padded_dim(), 0.0);
    let mut batch = Vec::with_capacity(cfg.batch);
    let mut coefs = Vec::with_capacity(cfg.batch);
    let mut zero_block = vec![false; blocks];

    for s in 0..cfg.epochs {
        let mut snap = x.clone();
        let mut fg = padded_full_gradient(problem, &partition, &snap, &mut counters);
        if cfg.active_set {
            active_set_step(problem, &partition, &mut snap, &mut fg, l_active, cfg.active_set_gradient, &mut counters);
            x.copy_from_slice(&snap);
            for (l, range) in partition.ranges().enumerate() {
                zero_block[l] = snap[range].iter().all(|&v| v == 0.0);
            }
        }
        for _ in 0..cfg.m {
            rng.sample_batch(n, cfg.batch, &mut batch);
            let l = rng.block(blocks);
            counters.inner_steps += 1;
            if cfg.active_set && zero_block[l] {
                counters.skipped_steps += 1;
                continue;
            }
            let inv_b = 1.0 / batch.len() as f64;
            coefs.clear();
            for &i in &batch {
                let mx = ds.row_dot(i, &x);
                coefs.push((i, (problem.model.deriv(i, mx) - problem.model.deriv(i, fg.margins[i])) * inv_b));
            }
            let range = partition.range(l);
            let v = block_gradient(problem, &partition, l, &fg.grad, &coefs, &x, &snap, &mut counters);
            let block = &mut x[range];
            for (xk, g) in block.iter_mut().zip(&v) {
                *xk -= cfg.eta * g;
            }
            problem.reg.prox_in_place(block, cfg.eta);
            counters.block_touches += 1;
        }
        rec.record(s + 1, &x, &counters);
    }
    x.truncate(problem.d());
    Ok(SolverOutput { x, record: rec.finish() })
}

fn check_step(eta: f64, m: usize, batch: usize, n: usize) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("inner loop count m must be at least 1".into()));
    }
    if batch == 0 || batch > n {
        return Err(Error::InvalidParameter(format!("batch size {batch} not in [1, {n}]")));
    }
    Ok(())
}
