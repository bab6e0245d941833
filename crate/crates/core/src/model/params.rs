use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::numcore::{ParamId, ParameterStore, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatParams {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    /// `2d × 1` attention vector.
    pub a: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalParams {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
}

/// Handles to every model tensor inside a [`ParameterStore`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelParams {
    /// `N × d` entity embeddings.
    pub emb: ParamId,
    pub gat: Vec<GatParams>,
    /// `(s·d) × d` fusion matrix.
    pub fuse: ParamId,
    pub temporal: TemporalParams,
    /// One `d × d` projection per relation.
    pub transr_w: Vec<ParamId>,
    /// `R × d` relation vectors.
    pub transr_r: ParamId,
}

impl ModelParams {
    /// Registers Xavier-initialized parameters for `entities` entities and
    /// `relations` relations.
    pub fn init(store: &mut ParameterStore, cfg: &ModelConfig, entities: usize, relations: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dim;
        let emb = store.add("emb", Tensor::xavier(entities, d, rng))?;
        let mut gat = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            gat.push(GatParams {
                wq: store.add(&format!("gat.{l}.wq"), Tensor::xavier(d, d, rng))?,
                wk: store.add(&format!("gat.{l}.wk"), Tensor::xavier(d, d, rng))?,
                wv: store.add(&format!("gat.{l}.wv"), Tensor::xavier(d, d, rng))?,
                a: store.add(&format!("gat.{l}.a"), Tensor::xavier(2 * d, 1, rng))?,
            });
        }
        let fuse = store.add("fuse.w", Tensor::xavier(cfg.samplers * d, d, rng))?;
        let temporal = TemporalParams {
            wq: store.add("temporal.wq", Tensor::xavier(d, d, rng))?,
            wk: store.add("temporal.wk", Tensor::xavier(d, d, rng))?,
            wv: store.add("temporal.wv", Tensor::xavier(d, d, rng))?,
        };
        let mut transr_w = Vec::with_capacity(relations);
        for r in 0..relations {
            transr_w.push(store.add(&format!("transr.{r}.w"), Tensor::xavier(d, d, rng))?);
        }
        let transr_r = store.add("transr.rel", Tensor::xavier(relations.max(1), d, rng))?;
        Ok(ModelParams {
            emb,
            gat,
            fuse,
            temporal,
            transr_w,
            transr_r,
        })
    }

    /// Resolves handles by name in a store loaded from a checkpoint,
    /// checking every shape against `cfg`.
    pub fn lookup(store: &ParameterStore, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dim;
        let get = |name: &str, rows: Option<usize>, cols: usize| -> Result<ParamId> {
            let id = store.id(name).ok_or_else(|| Error::Unknown {
                kind: "parameter",
                id: name.to_string(),
            })?;
            let (r, c) = store.value(id).shape();
            if c != cols || rows.is_some_and(|want| want != r) {
                return Err(Error::Shape {
                    op: "checkpoint parameter",
                    lhs: (r, c),
                    rhs: (rows.unwrap_or(r), cols),
                });
            }
            Ok(id)
        };
        let emb = get("emb", None, d)?;
        let gat = (0..cfg.layers)
            .map(|l| {
                Ok(GatParams {
                    wq: get(&format!("gat.{l}.wq"), Some(d), d)?,
                    wk: get(&format!("gat.{l}.wk"), Some(d), d)?,
                    wv: get(&format!("gat.{l}.wv"), Some(d), d)?,
                    a: get(&format!("gat.{l}.a"), Some(2 * d), 1)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fuse = get("fuse.w", Some(cfg.samplers * d), d)?;
        let temporal = TemporalParams {
            wq: get("temporal.wq", Some(d), d)?,
            wk: get("temporal.wk", Some(d), d)?,
            wv: get("temporal.wv", Some(d), d)?,
        };
        let transr_r = get("transr.rel", None, d)?;
        let relations = store.value(transr_r).rows();
        let transr_w = (0..relations)
            .map_while(|r| store.id(&format!("transr.{r}.w")))
            .collect::<Vec<_>>();
        for &w in &transr_w {
            if store.value(w).shape() != (d, d) {
                return Err(Error::Shape {
                    op: "checkpoint parameter",
                    lhs: store.value(w).shape(),
                    rhs: (d, d),
                });
            }
        }
        Ok(ModelParams {
            emb,
            gat,
            fuse,
            temporal,
            transr_w,
            transr_r,
        })
    }

    /// Parameters updated by the ranking pass.
    pub fn ranking_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.emb];
        for g in &self.gat {
            ids.extend([g.wq, g.wk, g.wv, g.a]);
        }
        ids.push(self.fuse);
        ids.extend([self.temporal.wq, self.temporal.wk, self.temporal.wv]);
        ids
    }

    /// Parameters updated by the completion pass.
    pub fn kgc_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.emb];
        ids.extend(self.transr_w.iter().copied());
        ids.push(self.transr_r);
        ids
    }

    pub fn num_entities(&self, store: &ParameterStore) -> usize {
        store.value(self.emb).rows()
    }
}
