//! Synthetic classification data: sparse Gaussian rows, labels from a planted
//! sparse predictor with random flips.

use avrbcd::SparseDataset;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    /// Expected fraction of nonzero entries per row.
    pub density: f64,
    /// Fraction of coordinates in the planted support.
    pub support: f64,
    /// Probability of flipping each label.
    pub flip: f64,
    /// Column `j` is scaled by `(1 + j)^(−decay)` before row normalization,
    /// which spreads the spectrum of `AᵀA`.
    pub decay: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            d: 500,
            density: 0.05,
            support: 0.1,
            flip: 0.05,
            decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: SparseDataset,
    pub planted: Vec<f64>,
}

impl SynthSpec {
    /// Rows are scaled to unit norm, as is usual for text benchmarks.
    pub fn generate(&self) -> avrbcd::Result<Synthetic> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let k = ((self.support * self.d as f64).round() as usize).clamp(1, self.d);
        let mut planted = vec![0.0; self.d];
        for j in index::sample(&mut rng, self.d, k).iter() {
            let w: f64 = rng.sample(StandardNormal);
            planted[j] = w;
        }

        let per_row = Binomial::new(self.d as u64, self.density.clamp(0.0, 1.0)).expect("density in [0, 1]");
        let mut rows = Vec::with_capacity(self.n);
        let mut labels = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let nnz = (per_row.sample(&mut rng) as usize).max(1);
            let mut cols = index::sample(&mut rng, self.d, nnz).into_vec();
            cols.sort_unstable();
            let mut row: Vec<(usize, f64)> = cols
                .into_iter()
                .map(|j| {
                    let v: f64 = rng.sample(StandardNormal);
                    (j, v * (1.0 + j as f64).powf(-self.decay))
                })
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            let score: f64 = row.iter().map(|&(j, v)| v * planted[j]).sum();
            let mut y = if score >= 0.0 { 1.0 } else { -1.0 };
            if rng.gen_bool(self.flip.clamp(0.0, 1.0)) {
                y = -y;
            }
            rows.push(row);
            labels.push(y);
        }
        Ok(Synthetic {
            data: SparseDataset::from_rows(self.d, rows, labels)?,
            planted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_density() {
        let s = SynthSpec {
            n: 400,
            d: 300,
            density: 0.05,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert_eq!((s.data.n(), s.data.d()), (400, 300));
        assert!((s.data.sparsity() - 0.05).abs() < 0.01);
        assert!(s.data.labels().iter().all(|&y| y == 1.0 || y == -1.0));
        assert_eq!(s.planted.iter().filter(|&&w| w != 0.0).count(), 30);
        for i in 0..400 {
            assert!((s.data.row_norm_sq(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded() {
        let spec = SynthSpec { n: 50, d: 40, ..Default::default() };
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a.data, b.data);
        let c = SynthSpec { seed: 1, ..spec }.generate().unwrap();
        assert_ne!(a.data, c.data);
    }
}
