//! Problem setup and (solver, seed) runs.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use avrbcd::solvers::fast::Avrbcd2;
use avrbcd::solvers::reference::{katyusha_run, mrbcd_run, svrg_run, Avrbcd1, MrbcdConfig, SvrgConfig};
use avrbcd::{
    ActiveSetGradient, BlockPartition, ErmModel, Problem, Regularizer, RngStream, RunRecord, SmoothnessProfile, SnapshotRule, SolverConfig, SparseDataset,
    StepRule,
};
use rayon::prelude::*;

use crate::config::{BenchConfig, DatasetSpec, SolverId, StepMode};
use crate::optimum::{self, Optimum, OptimumOptions};
use crate::plot;
use crate::report::{self, Curve};

/// A loaded problem with the constants every solver needs.
pub struct Prepared {
    pub config: BenchConfig,
    pub problem: Problem,
    pub partition: BlockPartition,
    pub profile: SmoothnessProfile,
    /// Single-block profile for the full-vector methods.
    pub profile_full: SmoothnessProfile,
}

pub fn load_dataset(spec: &DatasetSpec) -> anyhow::Result<SparseDataset> {
    Ok(match spec {
        DatasetSpec::Synthetic(s) => s.generate()?.data,
        DatasetSpec::LibSvm(path) => SparseDataset::read_libsvm_file(path, None).with_context(|| format!("reading {}", path.display()))?,
    })
}

impl Prepared {
    pub fn new(config: BenchConfig) -> anyhow::Result<Self> {
        let data = load_dataset(&config.dataset)?;
        Self::from_data(config, data)
    }

    pub fn from_data(config: BenchConfig, data: SparseDataset) -> anyhow::Result<Self> {
        let model = ErmModel::new(Arc::new(data), config.loss)?;
        let reg = Regularizer::from_l1_weight(config.lambda1)?;
        let problem = Problem::new(model, reg);
        let d = problem.d();
        if config.blocks > d {
            bail!("blocks = {} exceeds dimension {d}", config.blocks);
        }
        let partition = BlockPartition::new(d, config.blocks)?;
        let profile = problem.model.smoothness(&partition)?;
        let profile_full = if config.blocks == 1 {
            profile.clone()
        } else {
            problem.model.smoothness(&BlockPartition::new(d, 1)?)?
        };
        Ok(Self {
            config,
            problem,
            partition,
            profile,
            profile_full,
        })
    }

    fn active_set_gradient(&self) -> ActiveSetGradient {
        if self.config.active_set_reuse {
            ActiveSetGradient::Reuse
        } else {
            ActiveSetGradient::Recompute
        }
    }

    fn solver_config(&self, m: usize, active_set: bool) -> SolverConfig {
        let c = &self.config;
        let mut s = match c.step_mode {
            StepMode::Practical => SolverConfig::practical(m, c.epochs, c.batch),
            StepMode::Theory => SolverConfig {
                batch: c.batch,
                ..SolverConfig::new(m, c.epochs)
            },
        };
        if let StepRule::Practical { .. } = s.step {
            s.step = StepRule::Practical {
                multiplier: c.step_multiplier,
            };
        }
        s.eta_cap = c.step_cap.map(|cap| cap / self.profile.l_max);
        s.active_set = active_set || c.active_set;
        s.active_set_gradient = self.active_set_gradient();
        if c.last_snapshot {
            s.snapshot = SnapshotRule::Last;
        }
        s
    }

    pub fn run(&self, id: SolverId, seed: u64) -> anyhow::Result<RunRecord> {
        let c = &self.config;
        let n = self.problem.n();
        let x0 = vec![0.0; self.problem.d()];
        let rng = RngStream::new(seed);
        let m_block = c.inner_steps(n);
        let m_full = (n / c.batch).max(1);
        let l_max = self.profile.l_max;
        let p = &self.problem;
        let out = match id {
            SolverId::Avrbcd | SolverId::AvrbcdAc => {
                let cfg = self.solver_config(m_block, id == SolverId::AvrbcdAc);
                let name = if cfg.active_set { "avrbcd-ac" } else { "avrbcd" };
                Avrbcd2::new(p, self.partition, &self.profile, cfg, &x0, rng)?.run_epochs(name)
            }
            SolverId::Avrbcd1 => {
                let cfg = self.solver_config(m_block, false);
                Avrbcd1::new(p, self.partition, &self.profile, cfg, &x0, rng)?.run_epochs("avrbcd1")
            }
            SolverId::Katyusha => {
                let mut cfg = self.solver_config(m_full, false);
                cfg.eta_cap = c.step_cap.map(|cap| cap / self.profile_full.l_max);
                katyusha_run(p, &self.profile_full, cfg, &x0, rng)?
            }
            SolverId::Svrg => svrg_run(
                p,
                SvrgConfig {
                    m: m_full,
                    eta: c.svrg_step / l_max,
                    epochs: c.epochs,
                    batch: c.batch,
                },
                &x0,
                rng,
            )?,
            SolverId::Mrbcd2 | SolverId::Mrbcd3 => mrbcd_run(
                p,
                self.partition,
                &self.profile,
                MrbcdConfig {
                    m: m_block,
                    eta: c.mrbcd_step / l_max,
                    epochs: c.epochs,
                    batch: c.batch,
                    active_set: id == SolverId::Mrbcd3,
                    active_set_l: None,
                    active_set_gradient: self.active_set_gradient(),
                },
                &x0,
                rng,
            )?,
        };
        let mut record = out.record;
        record.solver = id.name().to_string();
        record.config_hash = c.hash();
        Ok(record)
    }

    /// Every configured (solver, seed) pair, in parallel. Results keep the
    /// configuration order.
    pub fn run_all(&self) -> Vec<(SolverId, u64, anyhow::Result<RunRecord>)> {
        let jobs: Vec<(SolverId, u64)> = self
            .config
            .solvers
            .iter()
            .flat_map(|&s| self.config.seeds.iter().map(move |&seed| (s, seed)))
            .collect();
        jobs.into_par_iter().map(|(s, seed)| (s, seed, self.run(s, seed))).collect()
    }
}

/// Everything produced by [`run_bench`].
pub struct BenchOutput {
    pub optimum: Optimum,
    pub records: Vec<RunRecord>,
    pub curves: Vec<Curve>,
    /// Runs that returned an error instead of a record.
    pub errors: Vec<(SolverId, u64, String)>,
    pub files: Vec<PathBuf>,
}

impl BenchOutput {
    /// Human-readable summary, one line per solver plus warnings.
    pub fn summary(&self, config: &BenchConfig) -> String {
        let mut s = format!("config {} ({})\n", config.name, config.hash());
        s += &format!(
            "reference F* = {:.15e}, gradient mapping {:.3e}{}\n",
            self.optimum.value,
            self.optimum.grad_map,
            if self.optimum.converged { "" } else { "  WARNING: tolerance not reached, best value used" }
        );
        for c in &self.curves {
            let last = c.points.last();
            s += &format!(
                "{:10} runs {:2}  final passes {:8.2}  final mean log-subopt {:7.2}",
                c.solver,
                last.map_or(0, |p| p.runs),
                last.map_or(f64::NAN, |p| p.effective_passes),
                last.map_or(f64::NAN, |p| p.mean_log_subopt)
            );
            if !c.failed.is_empty() {
                s += &format!("  diverged seeds {:?}", c.failed);
            }
            s.push('\n');
        }
        for (id, seed, e) in &self.errors {
            s += &format!("{id} seed {seed} failed: {e}\n");
        }
        s
    }
}

/// Reference optimum, every (solver, seed) run, seed averages, and the
/// output files (`runs.csv`, one `<solver>.csv` per solver, `curves.svg`,
/// `summary.txt`) under `config.output`.
pub fn run_bench(config: BenchConfig) -> anyhow::Result<BenchOutput> {
    config.validate()?;
    let prep = Prepared::new(config)?;
    let c = &prep.config;
    fs::create_dir_all(&c.output).with_context(|| format!("creating {}", c.output.display()))?;
    let optimum = reference_optimum(&prep)?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (id, seed, r) in prep.run_all() {
        match r {
            Ok(mut r) => {
                r.set_reference(optimum.value);
                records.push(r);
            }
            Err(e) => errors.push((id, seed, format!("{e:#}"))),
        }
    }
    let mut curves = Vec::new();
    let mut files = Vec::new();
    let hash = c.hash();
    for id in &c.solvers {
        let runs: Vec<RunRecord> = records.iter().filter(|r| r.solver == id.name()).cloned().collect();
        let curve = report::aggregate(id.name(), &runs)?;
        let path = c.output.join(format!("{}.csv", id.name()));
        report::write_curve_file(&path, &curve, &hash)?;
        files.push(path);
        curves.push(curve);
    }
    let path = c.output.join("runs.csv");
    report::write_runs_file(&path, &records)?;
    files.push(path);
    let path = c.output.join("curves.svg");
    fs::write(&path, plot::svg(&curves, &c.name, &hash))?;
    files.push(path);
    let mut out = BenchOutput {
        optimum,
        records,
        curves,
        errors,
        files,
    };
    let path = c.output.join("summary.txt");
    fs::write(&path, out.summary(c))?;
    out.files.push(path);
    Ok(out)
}

/// Cached under `<output>/cache`, keyed by the problem hash.
pub fn reference_optimum(prep: &Prepared) -> anyhow::Result<Optimum> {
    let c = &prep.config;
    let opts = OptimumOptions {
        tol: c.ref_tol,
        max_epochs: c.ref_max_epochs,
        blocks: c.blocks,
        ..Default::default()
    };
    Ok(optimum::cached(&prep.problem, opts, &c.output.join("cache"), &c.problem_hash())?)
}
