use std::collections::HashSet;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId};
use crate::rng::{mix, rng_from};
use crate::sampler::subgraph::{SamplerTag, Subgraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KhopConfig {
    pub k: usize,
    /// Maximum neighbors drawn at each expanded node.
    pub budget: usize,
    pub seed: u64,
}

impl Default for KhopConfig {
    fn default() -> Self {
        KhopConfig {
            k: 3,
            budget: 4,
            seed: 0,
        }
    }
}

impl KhopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("khop k must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("khop budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Randomized breadth-first expansion: every node reached within `k - 1`
/// hops draws up to `budget` of its neighbors uniformly without
/// replacement. The random stream depends only on `cfg.seed` and `user`.
pub fn khop_subgraph(adj: &AdjacencyIndex, user: EntityId, cfg: &KhopConfig) -> Result<Subgraph> {
    cfg.validate()?;
    if user.index() >= adj.num_nodes() {
        return Err(Error::Unknown {
            kind: "entity",
            id: user.to_string(),
        });
    }
    let mut rng = rng_from(mix(cfg.seed, &[u64::from(user.0)]));
    let mut seen: HashSet<EntityId> = HashSet::from([user]);
    let mut picked = vec![user];
    let mut frontier = vec![user];
    for _ in 0..cfg.k {
        let mut next = Vec::new();
        for &u in &frontier {
            let nb = adj.neighbors(u);
            let chosen: Vec<EntityId> = if nb.len() <= cfg.budget {
                nb.to_vec()
            } else {
                let mut idx = sample(&mut rng, nb.len(), cfg.budget).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| nb[i]).collect()
            };
            for v in chosen {
                if seen.insert(v) {
                    picked.push(v);
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(Subgraph::induced(adj, user, &picked, SamplerTag::Khop))
}
