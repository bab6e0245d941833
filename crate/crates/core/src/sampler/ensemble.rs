use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId};
use crate::rng::mix;
use crate::sampler::khop::{khop_subgraph, KhopConfig};
use crate::sampler::ppr::{ppr_subgraph, PprConfig};
use crate::sampler::subgraph::{SamplerTag, Subgraph};

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerSpec {
    Ppr(PprConfig),
    Khop(KhopConfig),
}

impl SamplerSpec {
    pub fn tag(&self) -> SamplerTag {
        match self {
            SamplerSpec::Ppr(_) => SamplerTag::Ppr,
            SamplerSpec::Khop(_) => SamplerTag::Khop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub samplers: Vec<SamplerSpec>,
}

impl Default for EnsembleConfig {
    /// One PPR sampler and one randomized 3-hop sampler.
    fn default() -> Self {
        EnsembleConfig {
            samplers: vec![
                SamplerSpec::Ppr(PprConfig::default()),
                SamplerSpec::Khop(KhopConfig::default()),
            ],
        }
    }
}

impl EnsembleConfig {
    pub fn ppr_only() -> Self {
        EnsembleConfig {
            samplers: vec![SamplerSpec::Ppr(PprConfig::default())],
        }
    }

    pub fn khop_only() -> Self {
        EnsembleConfig {
            samplers: vec![SamplerSpec::Khop(KhopConfig::default())],
        }
    }

    pub fn len(&self) -> usize {
        self.samplers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samplers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samplers.is_empty() {
            return Err(Error::Config("ensemble needs at least one sampler".into()));
        }
        for s in &self.samplers {
            match s {
                SamplerSpec::Ppr(c) => c.validate()?,
                SamplerSpec::Khop(c) => c.validate()?,
            }
        }
        Ok(())
    }

    /// Copy with every k-hop seed replaced by one derived from `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samplers {
            if let SamplerSpec::Khop(c) = s {
                c.seed = seed;
            }
        }
        out
    }
}

/// One subgraph per configured sampler, in order. The i-th sampler draws
/// from its own stream derived from its seed and `i`.
pub fn ensemble_sample(adj: &AdjacencyIndex, user: EntityId, cfg: &EnsembleConfig) -> Result<Vec<Subgraph>> {
    cfg.validate()?;
    cfg.samplers
        .iter()
        .enumerate()
        .map(|(i, spec)| match spec {
            SamplerSpec::Ppr(c) => ppr_subgraph(adj, user, c),
            SamplerSpec::Khop(c) => {
                let c = KhopConfig {
                    seed: mix(c.seed, &[i as u64]),
                    ..c.clone()
                };
                khop_subgraph(adj, user, &c)
            }
        })
        .collect()
}

/// Like [`ensemble_sample`], but a user with no edges in the snapshot gets
/// one singleton subgraph per sampler instead of an error.
pub fn ensemble_sample_or_singleton(adj: &AdjacencyIndex, user: EntityId, cfg: &EnsembleConfig) -> Result<Vec<Subgraph>> {
    if user.index() < adj.num_nodes() && adj.degree(user) == 0 {
        cfg.validate()?;
        return Ok(vec![Subgraph::singleton(user, SamplerTag::Singleton); cfg.len()]);
    }
    ensemble_sample(adj, user, cfg)
}
