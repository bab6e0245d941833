//! Margin loss on TransR scores with tail-corrupted negatives.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{EntityId, RelationId};
use crate::model::{transr_on_tape, transr_score, ModelParams};
use crate::numcore::{ParameterStore, Tape, Var};

/// A positive triple with one corrupted tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KgcSample {
    pub head: EntityId,
    pub rel: RelationId,
    pub tail: EntityId,
    pub neg: EntityId,
}

/// `Σ max(0, f_r(h, t) + λ − f_r(h, t⁻))`.
pub fn kgc_loss(store: &ParameterStore, params: &ModelParams, batch: &[KgcSample], margin: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("kgc batch"));
    }
    let mut total = 0.0;
    for s in batch {
        let pos = transr_score(store, params, s.head, s.rel, s.tail)?;
        let neg = transr_score(store, params, s.head, s.rel, s.neg)?;
        total += (pos + margin - neg).max(0.0);
    }
    Ok(total)
}

/// Tape form of [`kgc_loss`]; samples are grouped by relation so each
/// projection matrix is applied once per group.
pub fn kgc_on_tape(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    batch: &[KgcSample],
    margin: f64,
) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::Empty("kgc batch"));
    }
    let mut groups: BTreeMap<RelationId, Vec<&KgcSample>> = BTreeMap::new();
    for s in batch {
        groups.entry(s.rel).or_default().push(s);
    }
    let mut parts = Vec::with_capacity(groups.len());
    for (rel, group) in groups {
        let w = *params.transr_w.get(rel.index()).ok_or_else(|| Error::Unknown {
            kind: "relation",
            id: rel.0.to_string(),
        })?;
        let idx = |f: fn(&KgcSample) -> EntityId| group.iter().map(|s| f(s).index()).collect::<Vec<_>>();
        let h = tape.param_rows(store, params.emb, &idx(|s| s.head))?;
        let t = tape.param_rows(store, params.emb, &idx(|s| s.tail))?;
        let n = tape.param_rows(store, params.emb, &idx(|s| s.neg))?;
        let w = tape.param(store, w);
        let r = tape.param_rows(store, params.transr_r, &[rel.index()])?;
        let score = |tape: &mut Tape, other: Var| -> Result<Var> {
            let diff = tape.sub(h, other)?;
            let proj = tape.matmul(diff, w)?;
            let z = tape.add_row(proj, r)?;
            Ok(tape.sum_sq_rows(z))
        };
        let fp = score(tape, t)?;
        let fn_ = score(tape, n)?;
        let gap = tape.sub(fp, fn_)?;
        let gap = tape.add_scalar(gap, margin);
        let hinge = tape.hinge(gap);
        parts.push(tape.sum(hinge));
    }
    let stacked = tape.stack_rows(&parts)?;
    Ok(tape.sum(stacked))
}

/// Single-triple tape score, kept for composite gradient checks.
pub fn kgc_pair_on_tape(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    s: &KgcSample,
    margin: f64,
) -> Result<Var> {
    let w = *params.transr_w.get(s.rel.index()).ok_or_else(|| Error::Unknown {
        kind: "relation",
        id: s.rel.0.to_string(),
    })?;
    let rows = tape.param_rows(store, params.emb, &[s.head.index(), s.tail.index(), s.neg.index()])?;
    let h = tape.slice_rows(rows, 0, 1)?;
    let t = tape.slice_rows(rows, 1, 1)?;
    let n = tape.slice_rows(rows, 2, 1)?;
    let w = tape.param(store, w);
    let r = tape.param_rows(store, params.transr_r, &[s.rel.index()])?;
    let fp = transr_on_tape(tape, h, t, w, r)?;
    let fneg = transr_on_tape(tape, h, n, w, r)?;
    let gap = tape.sub(fp, fneg)?;
    let gap = tape.add_scalar(gap, margin);
    Ok(tape.hinge(gap))
}
