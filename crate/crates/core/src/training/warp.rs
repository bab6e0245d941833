//! Weighted approximate-rank pairwise loss.
//!
//! For a positive score `γ⁺` and negative scores `γ⁻`, the rank estimate is
//! the number of margin violations `#{γ⁻ + λ > γ⁺}`, clamped to at least 1,
//! and the loss is `L(rank) / rank · Σ max(0, λ − γ⁺ + γ⁻)` with
//! `L(k) = Σ_{i ≤ k} 1/i`.

use crate::error::{Error, Result};
use crate::numcore::{Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpConfig {
    pub margin: f64,
    pub n_neg: usize,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig { margin: 1.0, n_neg: 10 }
    }
}

impl WarpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::Config(format!("warp margin must be positive, got {}", self.margin)));
        }
        if self.n_neg == 0 {
            return Err(Error::Config("warp needs at least one negative".into()));
        }
        Ok(())
    }
}

/// `L(k) = Σ_{i=1}^{k} 1/i`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

pub fn warp_rank(pos: f64, negs: &[f64], margin: f64) -> usize {
    negs.iter().filter(|&&n| n + margin > pos).count().max(1)
}

pub fn warp_loss(pos: f64, negs: &[f64], margin: f64) -> f64 {
    let rank = warp_rank(pos, negs, margin);
    let hinge: f64 = negs.iter().map(|&n| (margin - pos + n).max(0.0)).sum();
    harmonic(rank) / rank as f64 * hinge
}

/// Tape form for one positive: `user` is `1 × d`, `items` stacks the
/// positive item in row 0 followed by the negatives. The rank weight is
/// computed from the forward values and treated as a constant.
pub fn warp_on_tape(tape: &mut Tape, user: Var, items: Var, margin: f64) -> Result<Var> {
    let n = tape.shape(items).0;
    if n < 2 {
        return Err(Error::Empty("warp negatives"));
    }
    let scores = tape.matmul_t(items, user)?;
    let s = tape.value(scores).data().to_vec();
    let weight = {
        let rank = warp_rank(s[0], &s[1..], margin);
        harmonic(rank) / rank as f64
    };
    // row i of `diff` is γ⁻_i − γ⁺
    let mut d = Tensor::zeros(n - 1, n);
    for i in 0..n - 1 {
        d[(i, 0)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    let d = tape.constant(d);
    let diff = tape.matmul(d, scores)?;
    let shifted = tape.add_scalar(diff, margin);
    let h = tape.hinge(shifted);
    let total = tape.sum(h);
    Ok(tape.scale(total, weight))
}
