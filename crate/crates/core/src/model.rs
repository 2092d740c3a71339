//! Linear-predictor ERM losses `f_i(x) = φ_i(a_iᵀx)` with their gradients and
//! smoothness constants.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{BlockPartition, SparseDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `log(1 + exp(−y t))`, labels in {−1, +1}.
    Logistic,
    /// Logistic loss plus `λ₂/2 ‖x‖²` folded into every component.
    RidgeLogistic { lambda2: f64 },
    /// `½ (t − y)²`.
    SquaredError,
}

impl LossKind {
    pub fn lambda2(&self) -> f64 {
        match *self {
            Self::RidgeLogistic { lambda2 } => lambda2,
            _ => 0.0,
        }
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self, Self::Logistic | Self::RidgeLogistic { .. })
    }

    /// Global bound on `φ''`.
    pub fn curvature_bound(&self) -> f64 {
        if self.is_logistic() {
            0.25
        } else {
            1.0
        }
    }

    /// `φ(t)` for label `y` (excluding the ridge term).
    #[inline]
    pub fn loss_scalar(&self, t: f64, y: f64) -> f64 {
        match self {
            Self::SquaredError => 0.5 * (t - y) * (t - y),
            _ => {
                let z = y * t;
                if z > 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                }
            }
        }
    }

    /// `φ'(t)` for label `y`.
    #[inline]
    pub fn loss_scalar_deriv(&self, t: f64, y: f64) -> f64 {
        match self {
            Self::SquaredError => t - y,
            _ => {
                let z = y * t;
                if z >= 0.0 {
                    let e = (-z).exp();
                    -y * e / (1.0 + e)
                } else {
                    -y / (1.0 + z.exp())
                }
            }
        }
    }
}

/// Smoothness constants: per-component `L_i`, per-block `L_l` of `F`, and
/// `L̃ = max(B L_B, L_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProfile {
    pub l_max: f64,
    pub l_block: f64,
    pub l_tilde: f64,
    pub per_block: Vec<f64>,
    /// Blocks whose power iteration hit the cap and fell back to a closed-form bound.
    pub stalled_blocks: usize,
}

/// Result of a full pass: `∇F(x)` and the margins `{a_iᵀx}` it needed.
#[derive(Debug, Clone)]
pub struct FullGradient {
    pub grad: Vec<f64>,
    pub margins: Vec<f64>,
}

/// `F(x) = (1/n) Σ_i f_i(x)` over a shared dataset.
#[derive(Debug, Clone)]
pub struct ErmModel {
    data: Arc<SparseDataset>,
    loss: LossKind,
}

const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITER: usize = 500;

impl ErmModel {
    pub fn new(data: Arc<SparseDataset>, loss: LossKind) -> Result<Self> {
        if data.n() == 0 {
            return Err(Error::EmptyDataset);
        }
        if loss.lambda2() < 0.0 || !loss.lambda2().is_finite() {
            return Err(Error::InvalidParameter(format!("lambda2 must be >= 0, got {}", loss.lambda2())));
        }
        if loss.is_logistic() {
            if let Some((index, &label)) = data.labels().iter().enumerate().find(|(_, &y)| y != 1.0 && y != -1.0) {
                return Err(Error::Label { index, label });
            }
        }
        Ok(Self { data, loss })
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }

    pub fn data_arc(&self) -> &Arc<SparseDataset> {
        &self.data
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn lambda2(&self) -> f64 {
        self.loss.lambda2()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::Dimension {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `φ_i'(t)`.
    #[inline]
    pub fn deriv(&self, i: usize, t: f64) -> f64 {
        self.loss.loss_scalar_deriv(t, self.data.label(i))
    }

    /// `F(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let margins = self.data.margins(x);
        Ok(self.value_from_margins(&margins, x))
    }

    /// `F(x)` from precomputed margins.
    pub fn value_from_margins(&self, margins: &[f64], x: &[f64]) -> f64 {
        let labels = self.data.labels();
        let data_term = margins
            .iter()
            .zip(labels)
            .map(|(&t, &y)| self.loss.loss_scalar(t, y))
            .sum::<f64>()
            / self.n() as f64;
        let l2 = self.lambda2();
        if l2 > 0.0 {
            data_term + 0.5 * l2 * x[..self.d()].iter().map(|v| v * v).sum::<f64>()
        } else {
            data_term
        }
    }

    /// `∇F(x)` together with the margins computed on the way.
    pub fn full_gradient(&self, x: &[f64]) -> Result<FullGradient> {
        self.check_dim(x)?;
        let n = self.n();
        let margins = self.data.margins(x);
        let mut grad = vec![0.0; self.d()];
        let inv_n = 1.0 / n as f64;
        for (i, &t) in margins.iter().enumerate() {
            let g = self.deriv(i, t) * inv_n;
            if g != 0.0 {
                let (idx, val) = self.data.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    grad[j as usize] += g * v;
                }
            }
        }
        let l2 = self.lambda2();
        if l2 > 0.0 {
            for (g, &xj) in grad.iter_mut().zip(x) {
                *g += l2 * xj;
            }
        }
        Ok(FullGradient { grad, margins })
    }

    /// Block `l` of the variance-reduced estimator
    /// `μ + ∇f_i(y) − ∇f_i(x̃)`, given the two margins `a_iᵀy`, `a_iᵀx̃`.
    ///
    /// `ridge` carries `([y]_l, [x̃]_l)` and is required when `λ₂ > 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn mixed_partial_gradient(
        &self,
        i: usize,
        partition: &BlockPartition,
        l: usize,
        margin_y: f64,
        margin_snap: f64,
        mu_block: &[f64],
        ridge: Option<(&[f64], &[f64])>,
    ) -> Result<Vec<f64>> {
        let range = partition.range(l);
        if mu_block.len() != range.len() {
            return Err(Error::Dimension {
                expected: range.len(),
                got: mu_block.len(),
            });
        }
        let mut v = mu_block.to_vec();
        let scale = self.deriv(i, margin_y) - self.deriv(i, margin_snap);
        let start = range.start;
        if scale != 0.0 {
            let (idx, val) = self.data.row_segment(i, range.clone());
            for (&j, &a) in idx.iter().zip(val) {
                v[j as usize - start] += scale * a;
            }
        }
        let l2 = self.lambda2();
        if l2 > 0.0 {
            let (y, snap) = ridge.ok_or_else(|| {
                Error::InvalidParameter("ridge loss needs the block values of y and the snapshot".into())
            })?;
            if y.len() != v.len() || snap.len() != v.len() {
                return Err(Error::Dimension {
                    expected: v.len(),
                    got: y.len().min(snap.len()),
                });
            }
            for (k, vk) in v.iter_mut().enumerate() {
                if !partition.is_phantom(start + k) {
                    *vk += l2 * (y[k] - snap[k]);
                }
            }
        }
        Ok(v)
    }

    /// Per-component `L_i = c_φ ‖a_i‖² + λ₂`.
    pub fn component_smoothness(&self, i: usize) -> f64 {
        self.loss.curvature_bound() * self.data.row_norm_sq(i) + self.lambda2()
    }

    /// Estimates `L_max`, `L_l` (largest eigenvalue of `(c_φ/n) A_lᵀA_l + λ₂ I`
    /// by power iteration over all blocks at once) and `L̃`.
    pub fn smoothness(&self, partition: &BlockPartition) -> Result<SmoothnessProfile> {
        if partition.dim() != self.d() {
            return Err(Error::Dimension {
                expected: self.d(),
                got: partition.dim(),
            });
        }
        if self.data.nnz() == 0 {
            return Err(Error::ZeroSmoothness);
        }
        let ds = &*self.data;
        let n = ds.n();
        let c = self.loss.curvature_bound();
        let l2 = self.lambda2();
        let blocks = partition.blocks();
        let l_max = (0..n).map(|i| self.component_smoothness(i)).fold(0.0, f64::max);

        let padded = partition.padded_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..padded)
            .map(|j| if partition.is_phantom(j) { 0.0 } else { 1.0 + 0.1 * rng.gen::<f64>() })
            .collect();
        normalize_blocks(&mut v, partition);
        let mut w = vec![0.0; padded];
        let mut estimate = vec![0.0; blocks];
        let mut converged = vec![false; blocks];
        let mut seg_dot: Vec<(usize, f64)> = Vec::new();

        for iter in 0..POWER_MAX_ITER {
            w.iter_mut().for_each(|e| *e = 0.0);
            for i in 0..n {
                let (idx, val) = ds.row(i);
                seg_dot.clear();
                for (&j, &a) in idx.iter().zip(val) {
                    let b = partition.block_of(j as usize);
                    match seg_dot.last_mut() {
                        Some((lb, acc)) if *lb == b => *acc += a * v[j as usize],
                        _ => seg_dot.push((b, a * v[j as usize])),
                    }
                }
                let mut s = 0;
                for (&j, &a) in idx.iter().zip(val) {
                    let b = partition.block_of(j as usize);
                    while seg_dot[s].0 != b {
                        s += 1;
                    }
                    w[j as usize] += seg_dot[s].1 * a;
                }
            }
            let scale = c / n as f64;
            let mut all = true;
            for (l, range) in partition.ranges().enumerate() {
                if converged[l] {
                    continue;
                }
                let norm = w[range.clone()].iter().map(|e| e * e).sum::<f64>().sqrt() * scale;
                if norm == 0.0 {
                    estimate[l] = 0.0;
                    converged[l] = true;
                    continue;
                }
                if iter > 0 && (norm - estimate[l]).abs() <= POWER_TOL * norm {
                    converged[l] = true;
                }
                estimate[l] = norm;
                let inv = 1.0 / (norm / scale);
                for j in range {
                    v[j] = w[j] * inv;
                }
                all &= converged[l];
            }
            if all {
                break;
            }
        }

        let mut stalled = 0;
        let row_norm_max = (0..n).map(|i| ds.row_norm_sq(i).sqrt()).fold(0.0, f64::max);
        for (l, range) in partition.ranges().enumerate() {
            if !converged[l] {
                stalled += 1;
                let (mut frob, mut cross) = (0.0, 0.0);
                for i in 0..n {
                    let sq: f64 = ds.row_segment(i, range.clone()).1.iter().map(|a| a * a).sum();
                    frob += sq;
                    cross += sq.sqrt();
                }
                estimate[l] = c / n as f64 * frob.min(row_norm_max * cross);
            }
        }
        let per_block: Vec<f64> = estimate.iter().map(|e| e + l2).collect();
        let l_block = per_block.iter().copied().fold(0.0, f64::max);
        if !(l_block > 0.0 && l_max > 0.0) {
            return Err(Error::ZeroSmoothness);
        }
        Ok(SmoothnessProfile {
            l_max,
            l_block,
            l_tilde: (blocks as f64 * l_block).max(l_max),
            per_block,
            stalled_blocks: stalled,
        })
    }
}

fn normalize_blocks(v: &mut [f64], partition: &BlockPartition) {
    for range in partition.ranges() {
        let norm = v[range.clone()].iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm > 0.0 {
            v[range].iter_mut().for_each(|e| *e /= norm);
        }
    }
}
