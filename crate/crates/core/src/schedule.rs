//! Per-epoch coupling weights and step sizes.
//!
//! Every epoch `s` uses a triple `α₁ + α₂ + α₃ = 1`. `α₂` follows the
//! quadratic recurrence `α₂,ₛ² = α₂,ₛ₋₁² (1 − α₂,ₛ)`, `α₁` decays by
//! `(1 − α₂,ₛ)` and `α₃` absorbs the rest. The step is
//! `η = 1 / (L̄ α₂ B)` with `L̄ = L_Q / (B α₃) + L_B`, or the practical
//! `c / (L_max α₂)`.

use crate::error::{Error, Result};
use crate::model::SmoothnessProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub s: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub gamma: f64,
    pub l_bar: f64,
    pub eta: f64,
}

/// Initial weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// `α₂,₀ = 2/ν`, `α₃,₀ = alpha3` (default `(ν − 2)/ν`), for `ν > 2`.
    Theory { nu: f64, alpha3: Option<f64> },
    /// `α₂,₀ = α₃,₀ = 1/(2B)`.
    Proximal,
    /// Fixed parameters for every epoch (test mode; the recurrence is not applied).
    Forced(ScheduleParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `η = 1/(L̄ α₂ B)`.
    Theory,
    /// `η = multiplier / (L_max α₂)`.
    Practical { multiplier: f64 },
}

/// The experiment's step multiplier (`4 / (L_max α₂)`).
pub const PRACTICAL_MULTIPLIER: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    init: InitMode,
    step: StepRule,
    blocks: usize,
    l_q: f64,
    l_block: f64,
    l_max: f64,
    eta_cap: Option<f64>,
    current: ScheduleParams,
}

/// `α₂,ₛ` from `α₂,ₛ₋₁`, in the cancellation-free form
/// `2a² / (√(a⁴ + 4a²) + a²) = 2a / (√(a² + 4) + a)`.
#[inline]
pub fn next_alpha2(a: f64) -> f64 {
    2.0 * a / ((a * a + 4.0).sqrt() + a)
}

/// Scales a running minimum; an empty set (`+∞`) stays empty.
fn scale_min(min: f64, factor: f64) -> f64 {
    if min == f64::INFINITY {
        min
    } else {
        factor * min
    }
}

fn gamma_of(alpha1: f64, alpha2: f64) -> f64 {
    if alpha1 < 1.0 {
        alpha2 / (1.0 - alpha1)
    } else {
        1.0
    }
}

impl Schedule {
    /// Builds the epoch-0 parameters. `l_q` defaults to `L_max`.
    pub fn new(init: InitMode, step: StepRule, blocks: usize, profile: &SmoothnessProfile, l_q: Option<f64>) -> Result<Self> {
        Self::with_constants(init, step, blocks, l_q.unwrap_or(profile.l_max), profile.l_block, profile.l_max)
    }

    pub fn with_constants(init: InitMode, step: StepRule, blocks: usize, l_q: f64, l_block: f64, l_max: f64) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::InvalidParameter("block count must be at least 1".into()));
        }
        if let StepRule::Practical { multiplier } = step {
            if !(multiplier > 0.0) {
                return Err(Error::InvalidParameter(format!("step multiplier must be positive, got {multiplier}")));
            }
        }
        let (alpha2, alpha3) = match init {
            InitMode::Theory { nu, alpha3 } => {
                if !(nu > 2.0) {
                    return Err(Error::InvalidParameter(format!("theory schedule needs nu > 2, got {nu}")));
                }
                let a3 = alpha3.unwrap_or((nu - 2.0) / nu);
                if !(a3 > 0.0 && a3 <= (nu - 2.0) / nu) {
                    return Err(Error::InvalidParameter(format!("alpha3 must lie in (0, (nu-2)/nu], got {a3}")));
                }
                (2.0 / nu, a3)
            }
            InitMode::Proximal => {
                let a = 1.0 / (2.0 * blocks as f64);
                (a, a)
            }
            InitMode::Forced(p) => (p.alpha2, p.alpha3),
        };
        let mut sched = Self {
            init,
            step,
            blocks,
            l_q,
            l_block,
            l_max,
            eta_cap: None,
            current: ScheduleParams {
                s: 0,
                alpha1: 0.0,
                alpha2,
                alpha3,
                gamma: 0.0,
                l_bar: 0.0,
                eta: 0.0,
            },
        };
        sched.current = match init {
            InitMode::Forced(p) => ScheduleParams {
                s: 0,
                gamma: gamma_of(p.alpha1, p.alpha2),
                ..p
            },
            _ => sched.finish(0, (1.0 - alpha2 - alpha3).max(0.0), alpha2, alpha3),
        };
        Ok(sched)
    }

    fn finish(&self, s: usize, alpha1: f64, alpha2: f64, alpha3: f64) -> ScheduleParams {
        let b = self.blocks as f64;
        let l_bar = self.l_q / (b * alpha3) + self.l_block;
        let eta = match self.step {
            StepRule::Theory => 1.0 / (l_bar * alpha2 * b),
            StepRule::Practical { multiplier } => multiplier / (self.l_max * alpha2),
        };
        let eta = self.eta_cap.map_or(eta, |cap| eta.min(cap));
        ScheduleParams {
            s,
            alpha1,
            alpha2,
            alpha3,
            gamma: gamma_of(alpha1, alpha2),
            l_bar,
            eta,
        }
    }

    /// Caps `η` from the current epoch on; the practical step grows like
    /// `1/α₂` and may need a ceiling on hard problems.
    pub fn with_eta_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!("step cap must be positive, got {cap}")));
        }
        self.eta_cap = Some(cap);
        if !matches!(self.init, InitMode::Forced(_)) {
            let p = self.current;
            self.current = self.finish(p.s, p.alpha1, p.alpha2, p.alpha3);
        }
        Ok(self)
    }

    pub fn params(&self) -> &ScheduleParams {
        &self.current
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Parameters of the next epoch, without advancing.
    pub fn peek_next(&self) -> ScheduleParams {
        let p = &self.current;
        if let InitMode::Forced(_) = self.init {
            return ScheduleParams { s: p.s + 1, ..*p };
        }
        let alpha2 = next_alpha2(p.alpha2);
        let alpha1 = p.alpha1 * (1.0 - alpha2);
        let alpha3 = 1.0 - alpha1 - alpha2;
        self.finish(p.s + 1, alpha1, alpha2, alpha3)
    }

    pub fn advance(&mut self) -> &ScheduleParams {
        self.current = self.peek_next();
        &self.current
    }
}

/// Weights expressing `x_k` as an affine combination of past snapshots
/// (`λ`), the current snapshot (`β`) and all `z` iterates (`γ`).
///
/// Only aggregates are kept: all `z` weights older than the newest scale by
/// `α₁` on every step, so their sum and minimum can be propagated exactly.
/// `with_history` additionally keeps the full vectors for small runs.
#[derive(Debug, Clone)]
pub struct CombinationWeights {
    /// Σ_i λ^i
    pub lambda_sum: f64,
    pub lambda_min: f64,
    pub beta: f64,
    /// Σ over `γ_k^l`, `l < k`
    pub gamma_tail_sum: f64,
    pub gamma_tail_min: f64,
    /// `γ_k^k`
    pub gamma_last: f64,
    /// Smallest weight seen at any step so far.
    pub min_seen: f64,
    pub k: usize,
    history: Option<(Vec<f64>, Vec<f64>)>,
}

impl CombinationWeights {
    /// Base case `x_0 = z_0`: `γ_0^0 = 1`, `β_0^0 = 0`.
    pub fn new(with_history: bool) -> Self {
        Self {
            lambda_sum: 0.0,
            lambda_min: f64::INFINITY,
            beta: 0.0,
            gamma_tail_sum: 0.0,
            gamma_tail_min: f64::INFINITY,
            gamma_last: 1.0,
            min_seen: 0.0,
            k: 0,
            history: with_history.then(|| (Vec::new(), vec![1.0])),
        }
    }

    pub fn total(&self) -> f64 {
        self.lambda_sum + self.beta + self.gamma_tail_sum + self.gamma_last
    }

    /// `(λ^0..λ^{s-1}, γ_k^0..γ_k^k)` when history is kept.
    pub fn history(&self) -> Option<(&[f64], &[f64])> {
        self.history.as_ref().map(|(l, g)| (l.as_slice(), g.as_slice()))
    }

    fn current_min(&self) -> f64 {
        self.lambda_min.min(self.gamma_tail_min).min(self.beta).min(self.gamma_last)
    }

    /// Moves the finished epoch's snapshot weight into `λ` (`λ^s = β_m^s`)
    /// and restarts `β` at zero for the new snapshot.
    pub fn begin_epoch(&mut self) {
        self.lambda_sum += self.beta;
        self.lambda_min = self.lambda_min.min(self.beta);
        if let Some((lambda, _)) = self.history.as_mut() {
            lambda.push(self.beta);
        }
        self.beta = 0.0;
    }

    /// One inner step `k → k+1` with the current epoch's parameters.
    ///
    /// `γ_{k+1}^k = α₁ γ_k^k + (1 − B) α₂`, which is `B α₁ α₂ + (1 − B) α₂`
    /// whenever `γ_k^k = B α₂` was set in the same epoch.
    pub fn step(&mut self, p: &ScheduleParams, blocks: usize) {
        let b = blocks as f64;
        let moved = p.alpha1 * self.gamma_last + (1.0 - b) * p.alpha2;
        self.gamma_tail_sum = p.alpha1 * self.gamma_tail_sum + moved;
        self.gamma_tail_min = scale_min(self.gamma_tail_min, p.alpha1).min(moved);
        self.gamma_last = b * p.alpha2;
        self.lambda_sum *= p.alpha1;
        self.lambda_min = scale_min(self.lambda_min, p.alpha1);
        self.beta = p.alpha1 * self.beta + p.alpha3;
        if let Some((lambda, gamma)) = self.history.as_mut() {
            lambda.iter_mut().for_each(|w| *w *= p.alpha1);
            let last = gamma.len() - 1;
            gamma[..last].iter_mut().for_each(|w| *w *= p.alpha1);
            gamma[last] = moved;
            gamma.push(b * p.alpha2);
        }
        self.k += 1;
        self.min_seen = if self.k == 1 {
            self.current_min()
        } else {
            self.min_seen.min(self.current_min())
        };
    }
}
