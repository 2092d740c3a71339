#![allow(dead_code)]

use std::sync::Arc;

use avrbcd::{BlockPartition, ErmModel, LossKind, Problem, Regularizer, SmoothnessProfile, SparseDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random sparse instance with ±1 labels; `density` of entries kept.
pub fn random_dataset(n: usize, d: usize, density: f64, seed: u64) -> SparseDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::new();
        for j in 0..d {
            if rng.gen_bool(density) {
                row.push((j, rng.gen_range(-1.0..1.0)));
            }
        }
        if row.is_empty() {
            row.push((rng.gen_range(0..d), 1.0));
        }
        rows.push(row);
        labels.push(if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
    }
    SparseDataset::from_rows(d, rows, labels).unwrap()
}

pub fn problem(data: SparseDataset, loss: LossKind, reg: Regularizer) -> Problem {
    Problem::new(ErmModel::new(Arc::new(data), loss).unwrap(), reg)
}

pub fn profile(p: &Problem, partition: &BlockPartition) -> SmoothnessProfile {
    p.model.smoothness(partition).unwrap()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
