use crate::error::{Error, Result};
use crate::graph::{EntityId, RelationId};
use crate::model::params::ModelParams;
use crate::numcore::{ParameterStore, Tape, Tensor, Var};

/// `‖(h − t) W_r + r‖²` for `1 × d` rows `h`, `t`, `r` and `d × d` `W_r`.
pub fn transr_on_tape(tape: &mut Tape, h: Var, t: Var, w: Var, r: Var) -> Result<Var> {
    let diff = tape.sub(h, t)?;
    let proj = tape.matmul(diff, w)?;
    let z = tape.add(proj, r)?;
    Ok(tape.sum_sq(z))
}

/// Tape score of the triple `(head, rel, tail)` using model parameters.
pub fn transr_triple(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    head: EntityId,
    rel: RelationId,
    tail: EntityId,
) -> Result<Var> {
    let w = *params.transr_w.get(rel.index()).ok_or_else(|| Error::Unknown {
        kind: "relation",
        id: rel.0.to_string(),
    })?;
    let ht = tape.param_rows(store, params.emb, &[head.index(), tail.index()])?;
    let h = tape.slice_rows(ht, 0, 1)?;
    let t = tape.slice_rows(ht, 1, 1)?;
    let w = tape.param(store, w);
    let r = tape.param_rows(store, params.transr_r, &[rel.index()])?;
    transr_on_tape(tape, h, t, w, r)
}

/// Value form of the TransR score; lower means more plausible.
pub fn transr_score(
    store: &ParameterStore,
    params: &ModelParams,
    head: EntityId,
    rel: RelationId,
    tail: EntityId,
) -> Result<f64> {
    let w = *params.transr_w.get(rel.index()).ok_or_else(|| Error::Unknown {
        kind: "relation",
        id: rel.0.to_string(),
    })?;
    let emb = store.value(params.emb);
    for e in [head, tail] {
        if e.index() >= emb.rows() {
            return Err(Error::Unknown {
                kind: "entity",
                id: e.0.to_string(),
            });
        }
    }
    let diff: Vec<f64> = emb
        .row(head.index())
        .iter()
        .zip(emb.row(tail.index()))
        .map(|(a, b)| a - b)
        .collect();
    let proj = Tensor::row_vector(diff).matmul(store.value(w))?;
    let r = store.value(params.transr_r).row(rel.index());
    Ok(proj.data().iter().zip(r).map(|(p, r)| (p + r) * (p + r)).sum())
}

/// Inner-product relevance of a user vector and an item vector.
pub fn relevance(user: &[f64], item: &[f64]) -> Result<f64> {
    if user.len() != item.len() {
        return Err(Error::Shape {
            op: "relevance",
            lhs: (1, user.len()),
            rhs: (1, item.len()),
        });
    }
    Ok(crate::numcore::tensor::dot(user, item))
}
