//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Built with `harness = false` so the lines are always printed; the process
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use avrbcd::solvers::fast::Avrbcd2;
use avrbcd::solvers::reference::{katyusha_run, Avrbcd1};
use avrbcd::{BlockPartition, ErmModel, InitMode, LossKind, Problem, Regularizer, RngStream, RunRecord, ScheduleParams, SolverConfig, SparseDataset};
use avrbcd_bench::config::{BenchConfig, SolverId};
use avrbcd_bench::report;
use avrbcd_bench::runner::Prepared;
use avrbcd_bench::synth::SynthSpec;
use avrbcd_bench::verify;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn problem(data: SparseDataset, loss: LossKind, reg: Regularizer) -> Problem {
    Problem::new(ErmModel::new(Arc::new(data), loss).unwrap(), reg)
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn c1_equivalence() -> Outcome {
    let t = Instant::now();
    let c = verify::proposition1(20).unwrap();
    let secs = t.elapsed().as_secs_f64();
    judge(c.passed && secs < 5.0, format!("max rel diff {:.2e} (tol 1e-8), {}, {secs:.2} s (limit 5 s)", c.measured, c.detail))
}

fn c2_weights() -> Outcome {
    let c = verify::lemma2(10_000).unwrap();
    judge(c.passed, format!("max |sum - 1| {:.2e} (tol 1e-12), {}", c.measured, c.detail))
}

fn c3_schedule() -> Outcome {
    let t = Instant::now();
    let c = verify::schedule_relations(100_000).unwrap();
    let secs = t.elapsed().as_secs_f64();
    judge(c.passed && secs < 1.0, format!("max identity error {:.2e} (tol 1e-12), {}, {secs:.3} s (limit 1 s)", c.measured, c.detail))
}

fn c4_gradients() -> Outcome {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let n = rng.gen_range(5..40);
        let d = rng.gen_range(4..30);
        let blocks = rng.gen_range(1..=d.min(5));
        let loss = if k % 2 == 0 { LossKind::Logistic } else { LossKind::RidgeLogistic { lambda2: 0.1 } };
        let data = SynthSpec {
            n,
            d,
            density: 0.5,
            seed: k,
            ..Default::default()
        }
        .generate()
        .unwrap()
        .data;
        let p = problem(data, loss, Regularizer::Zero);
        let m = &p.model;
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let snap: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let central = |f: &dyn Fn(&[f64]) -> f64, at: &[f64], j: usize| {
            let mut a = at.to_vec();
            let mut b = at.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        };
        let rel = |g: &[f64], fd: &[f64]| {
            let den = fd.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
            g.iter().zip(fd).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())) / den
        };

        let big_f = |v: &[f64]| m.value(v).unwrap();
        let g = m.full_gradient(&x).unwrap().grad;
        let fd: Vec<f64> = (0..d).map(|j| central(&big_f, &x, j)).collect();
        worst = worst.max(rel(&g, &fd));

        // mixed estimator block against finite differences of its parts
        let part = BlockPartition::new(d, blocks).unwrap();
        let mu = m.full_gradient(&snap).unwrap().grad;
        let mu_fd: Vec<f64> = (0..d).map(|j| central(&big_f, &snap, j)).collect();
        let i = rng.gen_range(0..n);
        let l = rng.gen_range(0..blocks);
        let l2 = loss.lambda2();
        let f_i = |v: &[f64]| loss.loss_scalar(m.data().row_dot(i, v), m.data().label(i)) + 0.5 * l2 * v.iter().map(|a| a * a).sum::<f64>();
        let r = part.range(l);
        let real: Vec<usize> = r.clone().filter(|&j| j < d).collect();
        let mut mu_block = vec![0.0; r.len()];
        for &j in &real {
            mu_block[j - r.start] = mu[j];
        }
        let pad = |v: &[f64]| (r.clone()).map(|j| if j < d { v[j] } else { 0.0 }).collect::<Vec<f64>>();
        let (yb, sb) = (pad(&x), pad(&snap));
        let ridge = (l2 > 0.0).then_some((yb.as_slice(), sb.as_slice()));
        let v = m
            .mixed_partial_gradient(i, &part, l, m.data().row_dot(i, &x), m.data().row_dot(i, &snap), &mu_block, ridge)
            .unwrap();
        let got: Vec<f64> = real.iter().map(|&j| v[j - r.start]).collect();
        let want: Vec<f64> = real.iter().map(|&j| mu_fd[j] + central(&f_i, &x, j) - central(&f_i, &snap, j)).collect();
        worst = worst.max(rel(&got, &want));
    }
    judge(worst <= 1e-5, format!("50 instances, max rel error {worst:.2e} (tol 1e-5)"))
}

fn c5_katyusha() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..6u64 {
        let n = [20, 60][k as usize % 2];
        let d = [10, 25][(k as usize / 2) % 2];
        let reg = if k % 3 == 0 { Regularizer::Zero } else { Regularizer::l1(5e-3).unwrap() };
        let data = SynthSpec {
            n,
            d,
            density: 0.4,
            seed: 500 + k,
            ..Default::default()
        }
        .generate()
        .unwrap()
        .data;
        let p = problem(data, LossKind::Logistic, reg);
        let part = BlockPartition::new(d, 1).unwrap();
        let prof = p.model.smoothness(&part).unwrap();
        let cfg = SolverConfig::new(n, 3);
        let x0 = vec![0.0; d];
        let kat = katyusha_run(&p, &prof, cfg, &x0, RngStream::new(k)).unwrap();
        let a2 = Avrbcd2::new(&p, part, &prof, cfg, &x0, RngStream::new(k)).unwrap().run_epochs("avrbcd");
        let a1 = Avrbcd1::new(&p, part, &prof, cfg, &x0, RngStream::new(k)).unwrap().run_epochs("avrbcd1");
        for a in [&a1, &a2] {
            worst = worst.max(max_rel_diff(&a.x, &kat.x));
            for (ra, rk) in a.record.rows.iter().zip(&kat.record.rows) {
                worst = worst.max((ra.objective - rk.objective).abs() / rk.objective.abs().max(1.0));
            }
        }
    }
    judge(worst <= 1e-10, format!("6 instances x 3 epochs, both forms, max rel diff {worst:.2e} (tol 1e-10)"))
}

fn least_squares_optimum(p: &Problem) -> f64 {
    let data = p.model.data();
    let mut a = DMatrix::<f64>::zeros(data.n(), data.d());
    for i in 0..data.n() {
        let (c, v) = data.row(i);
        for (j, x) in c.iter().zip(v) {
            a[(i, *j as usize)] = *x;
        }
    }
    let y = DVector::from_column_slice(data.labels());
    let x = (a.transpose() * &a).cholesky().expect("full column rank").solve(&(a.transpose() * y));
    p.objective(x.as_slice())
}

fn curve(prep: &Prepared, f_star: f64) -> report::Curve {
    let mut runs: Vec<RunRecord> = prep
        .run_all()
        .into_iter()
        .map(|(_, _, r)| {
            let mut r = r.unwrap();
            r.set_reference(f_star);
            r
        })
        .collect();
    runs.sort_by_key(|r| r.seed);
    report::aggregate(&runs[0].solver.clone(), &runs).unwrap()
}

fn c6_rate() -> Outcome {
    let t = Instant::now();
    let base = [
        "loss=squared",
        "lambda1=0",
        "n=500",
        "d=200",
        "density=0.1",
        "decay=1.15",
        "blocks=4",
        "batch=1",
        "seeds=0..10",
        "step_mode=theory",
        "svrg_step=0.5",
        "mrbcd_step=1",
    ];
    let cfg = |extra: &[&str]| BenchConfig::default().with_overrides(base.iter().chain(extra).copied()).unwrap();
    let prep = Prepared::new(cfg(&["solvers=avrbcd", "epochs=320"])).unwrap();
    let f_star = least_squares_optimum(&prep.problem);
    let ours = curve(&prep, f_star);

    // C/s² in log space: log₁₀ gap = c − 2 log₁₀ s over epochs 3..=30
    let pts: Vec<(f64, f64)> = ours.points.iter().filter(|p| (3..=30).contains(&p.epoch)).map(|p| ((p.epoch as f64).log10(), p.mean_log_subopt)).collect();
    let c = pts.iter().map(|(x, y)| y + 2.0 * x).sum::<f64>() / pts.len() as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - (c - 2.0 * x)).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;

    let Some(ours_passes) = ours.passes_to(-6.0) else {
        return Outcome::Fail(format!("R² {r2:.4}; AVRBCD did not reach 1e-6 in 320 epochs"));
    };
    // every epoch costs at least one pass, so this many epochs covers the
    // pass budget the baselines would need to tie
    let budget = ours_passes / 0.8;
    let epochs = format!("epochs={}", budget.ceil() as usize + 1);
    let mut ok = r2 >= 0.95;
    let mut detail = format!("C/s² fit R² {r2:.4} (min 0.95); passes to 1e-6: avrbcd {ours_passes:.1}");
    for id in [SolverId::Mrbcd2, SolverId::Svrg] {
        let prep = Prepared::new(cfg(&[&format!("solvers={id}"), &epochs])).unwrap();
        let theirs = curve(&prep, f_star);
        match theirs.passes_to(-6.0) {
            Some(p) => {
                ok &= ours_passes <= 0.8 * p;
                detail += &format!(", {id} {p:.1} (ratio {:.2})", ours_passes / p);
            }
            None => {
                let reached = theirs.points.last().map_or(f64::NAN, |p| p.effective_passes);
                detail += &format!(", {id} > {reached:.1} (not reached)");
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    detail += &format!("; {secs:.1} s (limit 120 s)");
    judge(ok, detail)
}

fn c7_complexity() -> Outcome {
    let spec = SynthSpec {
        n: 2000,
        d: 10_000,
        density: 0.01,
        seed: 7,
        ..Default::default()
    };
    let data = spec.generate().unwrap().data;
    let rho = data.sparsity();
    let (n, d, blocks) = (data.n(), data.d(), 100);
    let p = problem(data, LossKind::Logistic, Regularizer::l1(1e-4).unwrap());
    let part = BlockPartition::new(d, blocks).unwrap();
    let prof = p.model.smoothness(&part).unwrap();
    let omega = part.block_size() as f64;
    let bound = 3.0 * (rho * d as f64 + blocks as f64 + omega);
    let mut detail = String::new();
    let mut ok = true;
    for active_set in [false, true] {
        let cfg = SolverConfig {
            active_set,
            ..SolverConfig::practical(n * blocks, 2, 1)
        };
        let mut s = Avrbcd2::new(&p, part, &prof, cfg, &vec![0.0; d], RngStream::new(3)).unwrap();
        let (mut evals, mut work, mut steps) = (0u64, 0u64, 0u64);
        let mut boundary_only = true;
        for _ in 0..2 {
            loop {
                let before = *s.counters();
                if !s.step() {
                    break;
                }
                let after = *s.counters();
                boundary_only &= after.full_vector_ops == before.full_vector_ops;
                evals += after.coord_grad_evals - before.coord_grad_evals;
                work += after.inner_work - before.inner_work;
                steps += 1;
            }
            let before = s.counters().full_vector_ops;
            s.end_epoch();
            boundary_only &= s.counters().full_vector_ops > before;
        }
        let per_eval = evals as f64 / steps as f64;
        let per_work = work as f64 / steps as f64;
        ok &= per_eval <= bound && per_work <= bound && boundary_only;
        detail += &format!(
            "{}: {per_eval:.2} evals/step, {per_work:.1} work/step, dense ops only at boundaries: {boundary_only}; ",
            if active_set { "ac" } else { "plain" }
        );
    }
    detail += &format!("bound 3(ρ̂d + B + Ω) = {bound:.1} with ρ̂ = {rho:.4}");
    judge(ok, detail)
}

fn c8_stability() -> Outcome {
    const STEPS: usize = 100_000;
    let d = 24;
    let blocks = 4;
    let data = SynthSpec {
        n: 60,
        d,
        density: 0.3,
        seed: 21,
        ..Default::default()
    }
    .generate()
    .unwrap()
    .data;
    let p = problem(data, LossKind::Logistic, Regularizer::l1(1e-3).unwrap());
    let part = BlockPartition::new(d, blocks).unwrap();
    let prof = p.model.smoothness(&part).unwrap();
    let params = ScheduleParams {
        s: 0,
        alpha1: 0.99,
        alpha2: 0.008,
        alpha3: 0.002,
        gamma: 0.0,
        l_bar: 0.0,
        eta: 0.05 / prof.l_max,
    };
    let cfg = SolverConfig {
        init: InitMode::Forced(params),
        ..SolverConfig::new(STEPS, 1)
    };
    let x0: Vec<f64> = (0..d).map(|j| 0.05 * j as f64 - 0.5).collect();
    let mut f = Avrbcd2::new(&p, part, &prof, cfg, &x0, RngStream::new(4)).unwrap();
    let a1 = f.params().alpha1;
    let coupling = f.params().alpha2 * blocks as f64 - f.params().gamma;
    let mut dense = vec![0.0; part.padded_dim()];
    let mut beta = 1.0f64;
    let mut u = vec![0.0; part.padded_dim()];
    let mut worst = 0.0f64;
    let mut broke_at = None;
    for t in 1..=STEPS {
        f.step();
        let l = f.last_block().unwrap();
        let delta = f.last_delta().to_vec();
        dense.iter_mut().for_each(|v| *v *= a1);
        beta *= a1;
        for (k, c) in part.range(l).enumerate() {
            dense[c] += coupling * delta[k];
            u[c] += coupling * delta[k] / beta;
        }
        if broke_at.is_none() && !u.iter().all(|v| v.is_finite()) {
            broke_at = Some(t);
        }
        if t % 1000 == 0 {
            let off = f.offset();
            let num = off.iter().zip(&dense).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den = dense.iter().map(|b| b * b).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
    }
    let naive_fails = broke_at.is_some() && beta < f64::MIN_POSITIVE;
    judge(
        worst <= 1e-6 && naive_fails,
        format!(
            "{STEPS} steps at α₁ = 0.99: lazy vs dense rel error {worst:.2e} (tol 1e-6); naive β = {beta:.3e}, u overflowed at step {}",
            broke_at.map_or("never".into(), |t| t.to_string())
        ),
    )
}

fn c9_active_set() -> Outcome {
    let base = [
        "n=1000",
        "d=500",
        "density=0.05",
        "support=0.1",
        "flip=0.05",
        "loss=logistic",
        "lambda1=1e-3",
        "blocks=100",
        "batch=1",
        "step_mode=theory",
        "epochs=40",
    ];
    let prep = Prepared::new(BenchConfig::default().with_overrides(base).unwrap()).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for seed in 0..3 {
        let plain = prep.run(SolverId::Avrbcd, seed).unwrap();
        let ac = prep.run(SolverId::AvrbcdAc, seed).unwrap();
        let f_plain = plain.final_objective().unwrap();
        let evals_plain = plain.counters.coord_grad_evals;
        // the active-set run stopped at the first epoch within 1e-6 of the
        // plain run's final objective
        let hit = ac.rows.iter().position(|r| r.objective <= f_plain + 1e-6);
        match hit {
            Some(k) => {
                let row = &ac.rows[k];
                let within = (row.objective - f_plain).abs() <= 1e-6 || row.objective < f_plain;
                let skipped = ac.counter_history[k].skipped_steps;
                ok &= within && row.coord_grad_evals < evals_plain && skipped > 0;
                detail += &format!(
                    "seed {seed}: epoch {} F diff {:+.2e}, evals {:.3e} vs {:.3e}, skipped {}; ",
                    row.epoch,
                    row.objective - f_plain,
                    row.coord_grad_evals as f64,
                    evals_plain as f64,
                    skipped
                );
            }
            None => {
                ok = false;
                detail += &format!("seed {seed}: never within 1e-6 (final diff {:+.2e}); ", ac.final_objective().unwrap() - f_plain);
            }
        }
    }
    judge(ok, detail.trim_end_matches("; ").to_string())
}

fn c10_table1() -> Outcome {
    let specs = [
        ("AVRBCD_REAL_SIM", "real-sim", 72_309usize, 20_958usize, 0.0024f64),
        ("AVRBCD_RCV1", "rcv1", 20_242, 47_236, 0.0016),
        ("AVRBCD_NEWS20", "news20.binary", 19_996, 1_355_191, 0.000336),
    ];
    let mut seen = 0;
    let mut ok = true;
    let mut detail = String::new();
    for (var, name, n, d, sparsity) in specs {
        let Ok(path) = std::env::var(var) else { continue };
        seen += 1;
        match SparseDataset::read_libsvm_file(&path, Some(d)) {
            Ok(ds) => {
                let rel = (ds.sparsity() - sparsity).abs() / sparsity;
                let good = ds.n() == n && ds.d() == d && rel <= 0.1;
                ok &= good;
                detail += &format!("{name}: n {} d {} sparsity {:.4}% (rel {rel:.3}); ", ds.n(), ds.d(), 100.0 * ds.sparsity());
            }
            Err(e) => {
                ok = false;
                detail += &format!("{name}: {e}; ");
            }
        }
    }
    if seen == 0 {
        return Outcome::Skip("set AVRBCD_REAL_SIM, AVRBCD_RCV1 or AVRBCD_NEWS20 to libsvm files".into());
    }
    judge(ok, detail.trim_end_matches("; ").to_string())
}

fn c11_prox() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fails = 0;
    for _ in 0..1000 {
        let lambda = rng.gen_range(1e-3..2.0);
        let step = rng.gen_range(1e-3..3.0);
        let len = rng.gen_range(1..12);
        let reg = Regularizer::l1(lambda).unwrap();
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut pa = a.clone();
        let mut pb = b.clone();
        reg.prox_in_place(&mut pa, step);
        reg.prox_in_place(&mut pb, step);
        let t = lambda * step;
        for (v, p) in a.iter().zip(&pa) {
            let closed = v.signum() * (v.abs() - t).max(0.0);
            if (closed - p).abs() > 1e-12 {
                fails += 1;
            }
            // (v − p)/step ∈ λ ∂|p|
            let sub = (v - p) / step;
            let optimal = if *p != 0.0 { (sub - lambda * p.signum()).abs() <= 1e-9 } else { sub.abs() <= lambda + 1e-9 };
            if !optimal {
                fails += 1;
            }
        }
        let dn = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let din = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        if dn > din + 1e-12 {
            fails += 1;
        }
    }
    judge(fails == 0, format!("1000 random inputs, {fails} violations of closed form, optimality or nonexpansiveness"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fast/reference iterate equivalence", c1_equivalence),
        ("combination weights partition unity", c2_weights),
        ("schedule relations", c3_schedule),
        ("gradient correctness", c4_gradients),
        ("single block equals katyusha", c5_katyusha),
        ("accelerated rate and pass ordering", c6_rate),
        ("per-iteration complexity", c7_complexity),
        ("lazy update stability", c8_stability),
        ("active-set fidelity", c9_active_set),
        ("dataset statistics", c10_table1),
        ("prox suite", c11_prox),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {:2} {tag} {name}: {detail}", k + 1);
    }
    println!("acceptance: {} of 11 failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
