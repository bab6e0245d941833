//! Causal self-attention over a user's per-step representations.

use crate::error::{Error, Result};
use crate::model::params::TemporalParams;
use crate::numcore::{ParameterStore, Tape, Tensor, Var};

/// Next-step intent from the trajectory `h` (`T × d`) at query row `j`
/// (0-based). Only rows `0..=j` enter the computation, so later rows cannot
/// influence the result. Returns the `1 × d` output and the `1 × (j+1)`
/// attention weights.
pub fn temporal_attention(
    tape: &mut Tape,
    store: &ParameterStore,
    p: &TemporalParams,
    h: Var,
    j: usize,
) -> Result<(Var, Var)> {
    let (t, d) = tape.shape(h);
    if j >= t {
        return Err(Error::Config(format!("query step {j} out of range for trajectory of length {t}")));
    }
    let prefix = tape.slice_rows(h, 0, j + 1)?;
    let last = tape.slice_rows(h, j, 1)?;
    let wq = tape.param(store, p.wq);
    let wk = tape.param(store, p.wk);
    let wv = tape.param(store, p.wv);
    let q = tape.matmul(last, wq)?;
    let k = tape.matmul(prefix, wk)?;
    let v = tape.matmul(prefix, wv)?;
    let s = tape.matmul_t(q, k)?;
    let s = tape.scale(s, 1.0 / (d as f64).sqrt());
    let beta = tape.masked_softmax_rows(s)?;
    let out = tape.matmul(beta, v)?;
    Ok((out, beta))
}

/// Full `T × T` weight matrix `β[i][j]` (column `j` is the distribution used
/// for query row `j`); entries with `i > j` are exactly 0.
pub fn temporal_weights(h: &Tensor, wq: &Tensor, wk: &Tensor) -> Result<Tensor> {
    let t = h.rows();
    let d = h.cols();
    let q = h.matmul(wq)?;
    let k = h.matmul(wk)?;
    let mut beta = Tensor::zeros(t, t);
    let scale = 1.0 / (d as f64).sqrt();
    for j in 0..t {
        let scores: Vec<f64> = (0..=j)
            .map(|i| crate::numcore::tensor::dot(q.row(j), k.row(i)) * scale)
            .collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let z: f64 = ex.iter().sum();
        for (i, e) in ex.iter().enumerate() {
            beta[(i, j)] = e / z;
        }
    }
    Ok(beta)
}

/// Value form of [`temporal_attention`]: `Σ_{i≤j} β_ij (h_i W_V)`.
pub fn temporal_output(h: &Tensor, wq: &Tensor, wk: &Tensor, wv: &Tensor, j: usize) -> Result<Tensor> {
    if j >= h.rows() {
        return Err(Error::Config(format!("query step {j} out of range for trajectory of length {}", h.rows())));
    }
    let prefix = Tensor::from_vec(j + 1, h.cols(), h.data()[..(j + 1) * h.cols()].to_vec())?;
    let beta = temporal_weights(&prefix, wq, wk)?;
    let v = prefix.matmul(wv)?;
    let mut out = Tensor::zeros(1, v.cols());
    for i in 0..=j {
        let b = beta[(i, j)];
        for (o, x) in out.row_mut(0).iter_mut().zip(v.row(i)) {
            *o += b * x;
        }
    }
    Ok(out)
}
