//! TransR fitting, used both for background pretraining and for the
//! completion pass of every training epoch.

use crate::error::{Error, Result};
use crate::graph::{Dataset, EntityId, EntityKind, RelationId};
use crate::model::ModelParams;
use crate::numcore::{adam_step, AdamConfig, ParameterStore, Tape};
use crate::rng::{mix, rng_from};
use crate::training::kgc::{kgc_on_tape, KgcSample};
use crate::training::negatives::NegativeSampler;

pub type Triple = (EntityId, RelationId, EntityId);

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    pub batch: usize,
    pub seed: u64,
    /// Draw fresh negatives every epoch; otherwise reuse the first draw.
    pub resample_negatives: bool,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 20,
            lr: 1e-2,
            margin: 1.0,
            batch: 256,
            seed: 0,
            resample_negatives: true,
        }
    }
}

/// Negative tails drawn from the tail's own kind.
#[derive(Debug, Clone)]
pub struct TailPools {
    kinds: Vec<EntityKind>,
    samplers: [NegativeSampler; 4],
}

impl TailPools {
    pub fn new(kinds: Vec<EntityKind>) -> Self {
        let of = |k: EntityKind| {
            NegativeSampler::new(
                kinds
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x == k)
                    .map(|(i, _)| EntityId(i as u32))
                    .collect(),
            )
        };
        let samplers = EntityKind::ALL.map(of);
        TailPools { kinds, samplers }
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        TailPools::new(data.registry.entities().map(|(_, r)| r.kind).collect())
    }

    pub fn kind(&self, e: EntityId) -> EntityKind {
        self.kinds[e.index()]
    }

    pub fn sampler(&self, kind: EntityKind) -> &NegativeSampler {
        &self.samplers[EntityKind::ALL.iter().position(|&k| k == kind).expect("listed kind")]
    }
}

/// Background interactions as `(user, action, target)` plus every static
/// triple.
pub fn background_triples(data: &Dataset) -> Vec<Triple> {
    let mut out = Vec::new();
    for t in data.segmentation.split.background_range() {
        for e in &data.snapshots[t].interactions {
            out.push((e.user, e.relation, e.target));
        }
    }
    out.extend(data.triples.iter().map(|s| (s.head, s.relation, s.tail)));
    out
}

pub fn static_triples(data: &Dataset) -> Vec<Triple> {
    data.triples.iter().map(|s| (s.head, s.relation, s.tail)).collect()
}

/// Pairs every triple with one corrupted tail of the same kind. Triples
/// whose tail kind has no alternative are dropped.
pub fn corrupt_tails(triples: &[Triple], pools: &TailPools, seed: u64) -> Vec<KgcSample> {
    let mut rng = rng_from(seed);
    triples
        .iter()
        .filter_map(|&(h, r, t)| {
            let neg = pools.sampler(pools.kind(t)).draw(&mut rng, 1, &[t]);
            neg.first().map(|&n| KgcSample {
                head: h,
                rel: r,
                tail: t,
                neg: n,
            })
        })
        .collect()
}

/// One pass of mini-batch Adam over `samples`; returns the summed loss
/// observed before each update.
pub fn kgc_pass(store: &mut ParameterStore, params: &ModelParams, samples: &[KgcSample], margin: f64, batch: usize, adam: &AdamConfig) -> Result<f64> {
    let ids = params.kgc_ids();
    let mut total = 0.0;
    let mut tape = Tape::new();
    for (b, chunk) in samples.chunks(batch.max(1)).enumerate() {
        tape.clear();
        store.zero_grads();
        let loss = kgc_on_tape(&mut tape, store, params, chunk, margin)?;
        let v = tape.value(loss).item();
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss {
                component: "L_KGC",
                at: format!("batch {b}"),
            });
        }
        total += v;
        tape.backward(loss, store)?;
        adam_step(store, &ids, adam);
    }
    Ok(total)
}

/// Fits TransR on `triples`; returns the mean per-triple loss of each epoch.
pub fn fit_transr(store: &mut ParameterStore, params: &ModelParams, triples: &[Triple], pools: &TailPools, cfg: &PretrainConfig) -> Result<Vec<f64>> {
    if triples.is_empty() {
        return Err(Error::Empty("pretraining triples"));
    }
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let fixed = corrupt_tails(triples, pools, mix(cfg.seed, &[0]));
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let samples = if cfg.resample_negatives {
            corrupt_tails(triples, pools, mix(cfg.seed, &[epoch as u64]))
        } else {
            fixed.clone()
        };
        if samples.is_empty() {
            return Err(Error::Empty("pretraining negatives"));
        }
        let total = kgc_pass(store, params, &samples, cfg.margin, cfg.batch, &adam)?;
        history.push(total / samples.len() as f64);
    }
    store.reset_optimizer();
    Ok(history)
}

/// TransR pretraining on the background steps and the product graph.
pub fn pretrain_background(data: &Dataset, store: &mut ParameterStore, params: &ModelParams, cfg: &PretrainConfig) -> Result<Vec<f64>> {
    let triples = background_triples(data);
    if data.segmentation.split.background == 0 || triples.is_empty() {
        return Err(Error::Empty("background steps"));
    }
    fit_transr(store, params, &triples, &TailPools::from_dataset(data), cfg)
}
