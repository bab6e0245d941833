//! Graph attention over a sampled subgraph, layer pooling and fusion of the
//! per-sampler vectors into one step representation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, PoolMode};
use crate::model::params::{GatParams, ModelParams};
use crate::numcore::{ParameterStore, Tape, Var};
use crate::sampler::Subgraph;

/// Row-major `n × n` neighbor mask for a subgraph. A node without neighbors
/// gets a self-loop when `self_loop` is set, otherwise it is an error.
pub fn attention_mask(sub: &Subgraph, self_loop: bool) -> Result<Arc<Vec<bool>>> {
    let n = sub.len();
    let mut keep = vec![false; n * n];
    let mut has = vec![false; n];
    for &(a, b) in sub.edges() {
        let (a, b) = (a as usize, b as usize);
        keep[a * n + b] = true;
        keep[b * n + a] = true;
        has[a] = true;
        has[b] = true;
    }
    for (u, &h) in has.iter().enumerate() {
        if !h {
            if !self_loop {
                return Err(Error::Numeric(format!(
                    "entity {} has no neighbor in its subgraph and self-loop fallback is off",
                    sub.entities()[u].0
                )));
            }
            keep[u * n + u] = true;
        }
    }
    Ok(Arc::new(keep))
}

/// One attention layer applied to every node:
/// `h_u ← σ_agg(Σ_v α_uv · h_v W_V)`, with
/// `α_u· = softmax_v σ_att(aᵀ[h_u W_Q ‖ h_v W_K])` over the neighbors of `u`.
pub fn gat_layer(
    tape: &mut Tape,
    store: &ParameterStore,
    h: Var,
    layer: &GatParams,
    mask: &Arc<Vec<bool>>,
    cfg: &ModelConfig,
) -> Result<Var> {
    Ok(gat_layer_weights(tape, store, h, layer, mask, cfg)?.0)
}

/// [`gat_layer`] that also returns the `n × n` attention matrix.
pub fn gat_layer_weights(
    tape: &mut Tape,
    store: &ParameterStore,
    h: Var,
    layer: &GatParams,
    mask: &Arc<Vec<bool>>,
    cfg: &ModelConfig,
) -> Result<(Var, Var)> {
    let d = cfg.dim;
    let wq = tape.param(store, layer.wq);
    let wk = tape.param(store, layer.wk);
    let wv = tape.param(store, layer.wv);
    let a = tape.param(store, layer.a);
    let a1 = tape.slice_rows(a, 0, d)?;
    let a2 = tape.slice_rows(a, d, d)?;
    let q = tape.matmul(h, wq)?;
    let k = tape.matmul(h, wk)?;
    let v = tape.matmul(h, wv)?;
    let s = tape.matmul(q, a1)?;
    let t = tape.matmul(k, a2)?;
    let e = tape.outer_sum(s, t)?;
    let e = cfg.attn_act.apply(tape, e);
    let e = tape.mask(e, mask.clone())?;
    let alpha = tape.masked_softmax_rows(e)?;
    let agg = tape.matmul(alpha, v)?;
    Ok((cfg.agg_act.apply(tape, agg), alpha))
}

/// Pools the layer outputs `h^(1..L)` (each `n × d`) into a `1 × d` row.
pub fn structural_pool(tape: &mut Tape, layers: &[Var], mode: PoolMode) -> Result<Var> {
    if layers.is_empty() {
        return Err(Error::Empty("structural_pool layers"));
    }
    match mode {
        PoolMode::Literal => {
            let centers = layers
                .iter()
                .map(|&h| tape.slice_rows(h, 0, 1))
                .collect::<Result<Vec<_>>>()?;
            let stacked = tape.stack_rows(&centers)?;
            let all: Vec<usize> = (0..centers.len()).collect();
            tape.mean_rows(stacked, &all)
        }
        PoolMode::EntityMean => {
            let stacked = tape.stack_rows(layers)?;
            let all: Vec<usize> = (0..tape.shape(stacked).0).collect();
            tape.mean_rows(stacked, &all)
        }
    }
}

/// Runs every attention layer over one subgraph and pools the result.
pub fn subgraph_representation(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    cfg: &ModelConfig,
    sub: &Subgraph,
) -> Result<Var> {
    let rows: Vec<usize> = sub.entities().iter().map(|e| e.index()).collect();
    let mut h = tape.param_rows(store, params.emb, &rows)?;
    let mask = attention_mask(sub, cfg.self_loop_fallback)?;
    let mut outs = Vec::with_capacity(params.gat.len());
    for layer in &params.gat {
        h = gat_layer(tape, store, h, layer, &mask, cfg)?;
        outs.push(h);
    }
    structural_pool(tape, &outs, cfg.pool)
}

/// `σ_fuse([h¹ ‖ … ‖ hˢ] W)` for `s` pooled `1 × d` rows.
pub fn fuse_subgraphs(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    cfg: &ModelConfig,
    reps: &[Var],
) -> Result<Var> {
    if reps.len() != cfg.samplers {
        return Err(Error::Config(format!(
            "fusion expects {} subgraph vectors, got {}",
            cfg.samplers,
            reps.len()
        )));
    }
    let cat = tape.concat_cols(reps)?;
    let w = tape.param(store, params.fuse);
    let z = tape.matmul(cat, w)?;
    Ok(cfg.fuse_act.apply(tape, z))
}

/// Step representation `h_u^t` (`1 × d`) from the step's subgraphs.
pub fn step_representation(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    cfg: &ModelConfig,
    subs: &[Subgraph],
) -> Result<Var> {
    let reps = subs
        .iter()
        .map(|s| subgraph_representation(tape, store, params, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    fuse_subgraphs(tape, store, params, cfg, &reps)
}
