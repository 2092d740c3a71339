//! Reference optimum `F^P(x*)` for the log-suboptimality metric.
//!
//! A stochastic warm start with the fast solver is followed by a
//! deterministic accelerated proximal gradient polish (with function-value
//! restarts) until the gradient mapping falls below the tolerance.

use std::fs;
use std::path::Path;

use avrbcd::solvers::fast::Avrbcd2;
use avrbcd::{BlockPartition, Problem, RngStream, SnapshotRule, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Gradient-mapping norm at `x` with `L = L_max`.
    pub grad_map: f64,
    pub converged: bool,
    /// Stochastic epochs plus deterministic iterations spent.
    pub work: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimumOptions {
    pub tol: f64,
    pub max_epochs: usize,
    pub max_polish_iters: usize,
    pub blocks: usize,
    pub seed: u64,
}

impl Default for OptimumOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_epochs: 10_000,
            max_polish_iters: 200_000,
            blocks: 1,
            seed: 0,
        }
    }
}

pub fn compute(problem: &Problem, opts: OptimumOptions) -> avrbcd::Result<Optimum> {
    let d = problem.d();
    let n = problem.n();
    let partition = BlockPartition::new(d, opts.blocks.min(d))?;
    let profile = problem.model.smoothness(&partition)?;
    let l_max = profile.l_max;
    let full = problem.model.smoothness(&BlockPartition::new(d, 1)?)?;
    let l_f = full.l_block.min(l_max);

    let x0 = vec![0.0; d];
    let mut best = x0.clone();
    let mut best_val = problem.objective(&x0);
    let mut gm = problem.gradient_mapping_norm(&best, l_max);
    let mut work = 0;

    // stochastic phase: stop at tolerance, cap, divergence or stagnation
    let epochs = opts.max_epochs.min(200);
    if gm > opts.tol && epochs > 0 {
        let cfg = SolverConfig {
            snapshot: SnapshotRule::Last,
            ..SolverConfig::practical(n * partition.blocks(), epochs, 1)
        };
        let mut solver = Avrbcd2::new(problem, partition, &profile, cfg, &x0, RngStream::new(opts.seed))?;
        let mut stale = 0;
        for _ in 0..epochs {
            solver.end_epoch();
            work += 1;
            let x = &solver.snapshot()[..d];
            let v = problem.objective(x);
            if !v.is_finite() {
                break;
            }
            if v < best_val {
                stale = if best_val - v < 1e-15 * best_val.abs().max(1.0) { stale + 1 } else { 0 };
                best_val = v;
                best.copy_from_slice(x);
                gm = problem.gradient_mapping_norm(&best, l_max);
                if gm <= opts.tol {
                    break;
                }
            } else {
                stale += 1;
            }
            if stale >= 10 {
                break;
            }
        }
    }

    if gm > opts.tol {
        let (x, v, iters) = polish(problem, &best, l_f, l_max, opts.tol, opts.max_polish_iters);
        work += iters;
        let gm_polished = problem.gradient_mapping_norm(&x, l_max);
        if gm_polished <= gm {
            best = x;
            best_val = v;
            gm = gm_polished;
        }
    }
    Ok(Optimum {
        converged: gm <= opts.tol,
        x: best,
        value: best_val,
        grad_map: gm,
        work,
    })
}

/// FISTA with step `1/l`, restarting the momentum whenever the step points
/// against it. The test uses iterates rather than objective values, which
/// stop resolving progress long before the tolerance is met.
fn polish(problem: &Problem, x0: &[f64], l: f64, l_check: f64, tol: f64, max_iters: usize) -> (Vec<f64>, f64, usize) {
    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    for it in 1..=max_iters {
        let g = problem.model.full_gradient(&y).expect("dimension checked").grad;
        let mut xn: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / l).collect();
        problem.reg.prox_in_place(&mut xn, 1.0 / l);
        let against: f64 = (0..x.len()).map(|k| (y[k] - xn[k]) * (xn[k] - x[k])).sum();
        if against > 0.0 {
            t = 1.0;
            y.copy_from_slice(&xn);
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / tn;
            for k in 0..x.len() {
                y[k] = xn[k] + beta * (xn[k] - x[k]);
            }
            t = tn;
        }
        x = xn;
        if it % 25 == 0 && problem.gradient_mapping_norm(&x, l_check) <= tol {
            let fx = problem.objective(&x);
            return (x, fx, it);
        }
    }
    let fx = problem.objective(&x);
    (x, fx, max_iters)
}

/// Plain-text cache: one `f64` bit pattern per line, value first.
pub fn save(opt: &Optimum, path: &Path) -> std::io::Result<()> {
    let mut s = format!(
        "{:016x}\n{:016x}\n{}\n{}\n",
        opt.value.to_bits(),
        opt.grad_map.to_bits(),
        opt.converged,
        opt.work
    );
    for v in &opt.x {
        s.push_str(&format!("{:016x}\n", v.to_bits()));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, s)
}

pub fn load(path: &Path) -> Option<Optimum> {
    let text = fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    let bits = |s: &str| u64::from_str_radix(s, 16).ok().map(f64::from_bits);
    let value = bits(lines.next()?)?;
    let grad_map = bits(lines.next()?)?;
    let converged = lines.next()?.parse().ok()?;
    let work = lines.next()?.parse().ok()?;
    let x = lines.map(bits).collect::<Option<Vec<_>>>()?;
    Some(Optimum {
        x,
        value,
        grad_map,
        converged,
        work,
    })
}

/// Loads the cached optimum for `key` under `dir`, computing it on a miss.
pub fn cached(problem: &Problem, opts: OptimumOptions, dir: &Path, key: &str) -> avrbcd::Result<Optimum> {
    let path = dir.join(format!("optimum-{key}.txt"));
    if let Some(opt) = load(&path) {
        if opt.x.len() == problem.d() {
            return Ok(opt);
        }
    }
    let opt = compute(problem, opts)?;
    save(&opt, &path)?;
    Ok(opt)
}
