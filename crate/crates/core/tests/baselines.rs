mod common;

use std::sync::Arc;

use avrbcd::solvers::fast::Avrbcd2;
use avrbcd::solvers::reference::{katyusha_run, mrbcd_run, svrg_run, Avrbcd1, MrbcdConfig, SvrgConfig};
use avrbcd::{ActiveSetGradient, BlockPartition, ErmModel, LossKind, Problem, Regularizer, RngStream, SolverConfig, SparseDataset};
use common::*;

fn prox_gradient_path(p: &Problem, x0: &[f64], eta: f64, steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let g = p.model.full_gradient(&x).unwrap().grad;
        x.iter_mut().zip(&g).for_each(|(a, b)| *a -= eta * b);
        p.reg.prox_in_place(&mut x, eta);
    }
    x
}

#[test]
fn svrg_on_one_sample_is_proximal_gradient() {
    let p = problem(random_dataset(1, 6, 0.9, 3), LossKind::Logistic, Regularizer::l1(0.05).unwrap());
    let x0 = vec![0.5, -0.4, 0.3, 0.0, 0.2, -0.1];
    let cfg = SvrgConfig {
        m: 4,
        eta: 0.7,
        epochs: 3,
        batch: 1,
    };
    let out = svrg_run(&p, cfg, &x0, RngStream::new(0)).unwrap();
    let want = prox_gradient_path(&p, &x0, 0.7, 12);
    assert!(max_rel_diff(&out.x, &want) <= 1e-12);
}

#[test]
fn full_batch_single_block_mrbcd_is_proximal_gradient() {
    let n = 15;
    let p = problem(random_dataset(n, 7, 0.5, 4), LossKind::Logistic, Regularizer::l1(0.02).unwrap());
    let part = BlockPartition::new(7, 1).unwrap();
    let prof = profile(&p, &part);
    let x0 = vec![0.1; 7];
    let cfg = MrbcdConfig {
        m: 5,
        eta: 1.5,
        epochs: 2,
        batch: n,
        active_set: false,
        active_set_l: None,
        active_set_gradient: ActiveSetGradient::Recompute,
    };
    let out = mrbcd_run(&p, part, &prof, cfg, &x0, RngStream::new(2)).unwrap();
    let want = prox_gradient_path(&p, &x0, 1.5, 10);
    assert!(max_rel_diff(&out.x, &want) <= 1e-12);
}

#[test]
fn minimizer_is_a_fixed_point() {
    // labels interpolated exactly by w, so every component gradient vanishes
    let d = 8;
    let base = random_dataset(30, d, 0.5, 6);
    let w: Vec<f64> = (0..d).map(|j| (j as f64 - 3.5) / 4.0).collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..base.n())
        .map(|i| {
            let (c, v) = base.row(i);
            c.iter().map(|&j| j as usize).zip(v.iter().copied()).collect()
        })
        .collect();
    let labels = (0..base.n()).map(|i| base.row_dot(i, &w)).collect();
    let data = SparseDataset::from_rows(d, rows, labels).unwrap();
    let p = Problem::new(ErmModel::new(Arc::new(data), LossKind::SquaredError).unwrap(), Regularizer::Zero);
    let part = BlockPartition::new(d, 4).unwrap();
    let prof = profile(&p, &part);
    for cfg in [SolverConfig::new(40, 3), SolverConfig::practical(40, 3, 3)] {
        let out = Avrbcd2::new(&p, part, &prof, cfg, &w, RngStream::new(1)).unwrap().run_epochs("avrbcd");
        assert!(max_rel_diff(&out.x, &w) <= 1e-12);
    }
}

#[test]
fn coupling_step_moves_only_the_drawn_block() {
    let d = 12;
    let p = problem(random_dataset(20, d, 0.5, 8), LossKind::Logistic, Regularizer::l1(0.01).unwrap());
    let part = BlockPartition::new(d, 3).unwrap();
    let prof = profile(&p, &part);
    let mut s = Avrbcd1::new(&p, part, &prof, SolverConfig::new(30, 2), &vec![0.05; d], RngStream::new(4)).unwrap();
    for _ in 0..2 {
        while s.step() {
            let l = s.last_block().unwrap();
            let r = part.range(l);
            for k in 0..d {
                if !r.contains(&k) {
                    assert_eq!(s.x()[k], s.y()[k], "coordinate {k} outside block {l}");
                }
            }
        }
        s.end_epoch();
    }
}

#[test]
fn katyusha_beats_svrg_on_a_small_lasso() {
    let n = 60;
    let d = 20;
    let mut wins = 0;
    for seed in 0..10u64 {
        let p = problem(random_dataset(n, d, 0.4, 50 + seed), LossKind::Logistic, Regularizer::l1(1e-3).unwrap());
        let part = BlockPartition::new(d, 1).unwrap();
        let prof = profile(&p, &part);
        let x0 = vec![0.0; d];
        let k = katyusha_run(&p, &prof, SolverConfig::new(n, 15), &x0, RngStream::new(seed)).unwrap();
        let cfg = SvrgConfig {
            m: n,
            eta: 0.5 / prof.l_max,
            epochs: 15,
            batch: 1,
        };
        let s = svrg_run(&p, cfg, &x0, RngStream::new(seed)).unwrap();
        if p.objective(&k.x) < p.objective(&s.x) {
            wins += 1;
        }
    }
    assert!(wins >= 8, "katyusha ahead on {wins}/10 seeds");
}
