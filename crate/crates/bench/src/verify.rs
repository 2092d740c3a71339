//! Self-check suites run by `bench verify`: fast/reference iterate
//! equivalence, the convex-combination weights, and the schedule relations.

use std::fmt;
use std::sync::Arc;

use avrbcd::schedule::CombinationWeights;
use avrbcd::solvers::fast::Avrbcd2;
use avrbcd::solvers::reference::Avrbcd1;
use avrbcd::{BlockPartition, ErmModel, InitMode, LossKind, Problem, Regularizer, RngStream, Schedule, SolverConfig, StepRule};

use crate::synth::SynthSpec;

/// Outcome of one suite: the worst measured deviation against its bound.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {:.3e} (tol {:.0e}) {}", self.name, self.measured, self.tolerance, self.detail)
    }
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Runs both AVRBCD forms side by side with a shared random stream and
/// returns the largest relative gap between their `x`, `z` and snapshot
/// iterates over `instances` small problems, each 3 epochs of `m = nB`.
pub fn proposition1(instances: usize) -> avrbcd::Result<Check> {
    let tol = 1e-8;
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    for k in 0..instances {
        let n = [10, 50][k % 2];
        let d = [8, 20][(k / 2) % 2];
        let b = [1, 2, 4][k % 3];
        let reg = if (k / 4) % 2 == 0 { Regularizer::Zero } else { Regularizer::l1(0.01)? };
        let spec = SynthSpec {
            n,
            d,
            density: 0.4,
            seed: 1000 + k as u64,
            ..Default::default()
        };
        let data = spec.generate()?.data;
        let p = Problem::new(ErmModel::new(Arc::new(data), LossKind::Logistic)?, reg);
        let part = BlockPartition::new(d, b)?;
        let prof = p.model.smoothness(&part)?;
        let cfg = SolverConfig::new(n * b, 3);
        let x0: Vec<f64> = (0..d).map(|j| 0.1 * ((j % 5) as f64 - 2.0)).collect();
        let mut a = Avrbcd1::new(&p, part, &prof, cfg, &x0, RngStream::new(k as u64))?;
        let mut f = Avrbcd2::new(&p, part, &prof, cfg, &x0, RngStream::new(k as u64))?;
        for _ in 0..cfg.epochs {
            while a.step() {
                if !f.step() {
                    worst = f64::INFINITY;
                    break;
                }
                steps += 1;
                worst = worst.max(max_rel_diff(a.x(), &f.x())).max(max_rel_diff(a.z(), &f.z()));
            }
            a.end_epoch();
            f.end_epoch();
            worst = worst.max(max_rel_diff(a.snapshot(), f.snapshot()));
        }
    }
    Ok(Check {
        name: "fast form matches reference iterates",
        measured: worst,
        tolerance: tol,
        passed: worst <= tol,
        detail: format!("{instances} instances, {steps} inner steps"),
    })
}

/// Runs the weight recurrence for `steps` inner steps of the first epoch
/// (proximal initialization) for B in {1, 2, 8}. Reports the largest
/// `|Σ weights − 1|`; the minimum weight and the base case are part of the
/// pass condition.
pub fn lemma2(steps: usize) -> avrbcd::Result<Check> {
    let tol = 1e-12;
    let mut worst = 0.0f64;
    let mut min_weight = f64::INFINITY;
    let mut base_ok = true;
    for blocks in [1usize, 2, 8] {
        let s = Schedule::with_constants(InitMode::Proximal, StepRule::Theory, blocks, 1.0, 1.0, 1.0)?;
        let p = *s.params();
        let bf = blocks as f64;
        let mut w = CombinationWeights::new(false);
        for k in 1..=steps {
            w.step(&p, blocks);
            if k == 1 {
                base_ok &= w.gamma_tail_sum == 0.5 - 0.5 / bf && w.gamma_last == 0.5;
            }
            worst = worst.max((w.total() - 1.0).abs());
        }
        min_weight = min_weight.min(w.min_seen);
    }
    Ok(Check {
        name: "first-epoch combination weights",
        measured: worst,
        tolerance: tol,
        passed: worst <= tol && min_weight >= -1e-15 && base_ok,
        detail: format!("min weight {min_weight:.3e}, base case {}", if base_ok { "exact" } else { "wrong" }),
    })
}

/// Theory initialization with `ν = 4` advanced `horizon` epochs: the
/// `α₂,ₛ ≤ 2/(s + ν)` bound, monotonicity, and the three ratio identities
/// used by the rate proof. Reports the largest relative identity error.
pub fn schedule_relations(horizon: usize) -> avrbcd::Result<Check> {
    let tol = 1e-12;
    let nu = 4.0;
    let mut s = Schedule::with_constants(InitMode::Theory { nu, alpha3: None }, StepRule::Theory, 4, 1.0, 0.5, 1.0)?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let sq = |a: f64| a * a;
    let mut prev = *s.params();
    let mut worst = 0.0f64;
    let mut order_ok = true;
    for k in 1..=horizon {
        let p = *s.advance();
        order_ok &= p.alpha2 <= 2.0 / (k as f64 + nu);
        order_ok &= p.alpha2 <= prev.alpha2 && p.alpha1 <= prev.alpha1 && p.alpha3 >= prev.alpha3;
        worst = worst
            .max(rel((1.0 - prev.alpha1) / sq(prev.alpha2), p.alpha3 / sq(p.alpha2)))
            .max(rel(1.0 / sq(prev.alpha2), (1.0 - p.alpha2) / sq(p.alpha2)));
        if prev.alpha1 > 0.0 {
            worst = worst.max(rel(prev.alpha1 / sq(prev.alpha2), p.alpha1 / sq(p.alpha2)));
        }
        prev = p;
    }
    Ok(Check {
        name: "schedule bound, monotonicity and ratio identities",
        measured: worst,
        tolerance: tol,
        passed: worst <= tol && order_ok,
        detail: format!("{horizon} epochs, ordering {}", if order_ok { "holds" } else { "violated" }),
    })
}

pub fn all() -> avrbcd::Result<Vec<Check>> {
    Ok(vec![proposition1(20)?, lemma2(10_000)?, schedule_relations(100_000)?])
}
