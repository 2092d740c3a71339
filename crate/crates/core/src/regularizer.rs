//! Block-separable nonsmooth regularizers `P(x) = Σ_l P_l([x]_l)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Zero,
    L1 { lambda: f64 },
}

impl Regularizer {
    pub fn l1(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("l1 weight must be positive, got {lambda}")));
        }
        Ok(Self::L1 { lambda })
    }

    /// `Zero` for `lambda == 0`, `L1` otherwise.
    pub fn from_l1_weight(lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            Ok(Self::Zero)
        } else {
            Self::l1(lambda)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// `P(x)`; for blocks, call it on the block slice.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// `prox_{step·P}(y)` on one block.
    pub fn prox_block(&self, y: &[f64], step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("prox step must be positive, got {step}")));
        }
        let mut out = y.to_vec();
        self.prox_in_place(&mut out, step);
        Ok(out)
    }

    /// In-place variant used on solver hot paths; `step` must be positive.
    #[inline]
    pub fn prox_in_place(&self, y: &mut [f64], step: f64) {
        debug_assert!(step > 0.0);
        match *self {
            Self::Zero => {}
            Self::L1 { lambda } => {
                let t = step * lambda;
                for v in y.iter_mut() {
                    *v = soft_threshold(*v, t);
                }
            }
        }
    }
}

/// `sign(v) · max(|v| − t, 0)`; ties `|v| == t` give exactly zero.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
