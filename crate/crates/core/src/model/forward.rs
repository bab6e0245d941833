use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::EntityId;
use crate::model::config::ModelConfig;
use crate::model::params::ModelParams;
use crate::model::structural::step_representation;
use crate::model::temporal::temporal_weights;
use crate::numcore::{ParameterStore, Tape, Tensor, Var};
use crate::sampler::SubgraphCache;

/// Stacks `h_u^t` for each step in `steps` into a `|steps| × d` trajectory.
pub fn trajectory(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    cfg: &ModelConfig,
    cache: &SubgraphCache,
    user: EntityId,
    steps: std::ops::Range<usize>,
) -> Result<Var> {
    if steps.is_empty() {
        return Err(Error::Empty("trajectory steps"));
    }
    let rows = steps
        .map(|t| {
            let subs = cache.get(user, t).ok_or_else(|| Error::Unknown {
                kind: "cached subgraph",
                id: format!("user {} step {t}", user.0),
            })?;
            step_representation(tape, store, params, cfg, subs)
        })
        .collect::<Result<Vec<_>>>()?;
    tape.stack_rows(&rows)
}

/// Value of a user's trajectory over `steps`.
pub fn trajectory_value(
    store: &ParameterStore,
    params: &ModelParams,
    cfg: &ModelConfig,
    cache: &SubgraphCache,
    user: EntityId,
    steps: std::ops::Range<usize>,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let h = trajectory(&mut tape, store, params, cfg, cache, user, steps)?;
    Ok(tape.value(h).clone())
}

/// Writes `user,step_from,step_to,beta` rows for every pair `i ≤ j` of a
/// trajectory whose first row is global step `first_step`.
pub fn write_attention_csv<W: Write>(
    out: &mut W,
    user: &str,
    first_step: usize,
    h: &Tensor,
    store: &ParameterStore,
    params: &ModelParams,
) -> std::io::Result<usize> {
    let beta = temporal_weights(h, store.value(params.temporal.wq), store.value(params.temporal.wk))
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    let mut n = 0;
    for j in 0..beta.cols() {
        for i in 0..=j {
            writeln!(out, "{user},{},{},{}", first_step + i, first_step + j, beta[(i, j)])?;
            n += 1;
        }
    }
    Ok(n)
}
