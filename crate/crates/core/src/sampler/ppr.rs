use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId};
use crate::sampler::subgraph::{SamplerTag, Subgraph};

#[derive(Debug, Clone, PartialEq)]
pub struct PprConfig {
    /// Teleport probability.
    pub alpha: f64,
    /// Push tolerance; `None` means `1e-4 / |entities|`.
    pub eps: Option<f64>,
    pub budget: usize,
    pub theta: f64,
    /// Keep selected entities that are unreachable from the center through
    /// induced edges.
    pub keep_disconnected: bool,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            alpha: 0.15,
            eps: None,
            budget: 32,
            theta: 0.0,
            keep_disconnected: false,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("ppr alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Config(format!("ppr eps must be positive, got {e}")));
            }
        }
        if self.budget == 0 {
            return Err(Error::Config("ppr budget must be at least 1".into()));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::Config(format!("ppr theta must be non-negative, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn eps_for(&self, adj: &AdjacencyIndex) -> f64 {
        self.eps.unwrap_or(1e-4 / adj.num_nodes().max(1) as f64)
    }
}

/// Forward-push approximation of personalized PageRank from `seed`.
///
/// Returns `(entity, estimate)` pairs sorted by entity id, only for entities
/// with a nonzero estimate. The seed is always pushed once.
pub fn approx_ppr(adj: &AdjacencyIndex, seed: EntityId, cfg: &PprConfig) -> Result<Vec<(EntityId, f64)>> {
    cfg.validate()?;
    if seed.index() >= adj.num_nodes() {
        return Err(Error::Unknown {
            kind: "entity",
            id: seed.to_string(),
        });
    }
    if adj.degree(seed) == 0 {
        return Err(Error::IsolatedSeed(seed.0));
    }
    let alpha = cfg.alpha;
    let eps = cfg.eps_for(adj);
    let mut p: HashMap<EntityId, f64> = HashMap::new();
    let mut r: HashMap<EntityId, f64> = HashMap::new();
    r.insert(seed, 1.0);
    let mut queue = VecDeque::from([seed]);
    let mut queued: HashMap<EntityId, bool> = HashMap::from([(seed, true)]);
    while let Some(v) = queue.pop_front() {
        queued.insert(v, false);
        let rv = r.insert(v, 0.0).unwrap_or(0.0);
        let deg = adj.degree(v);
        if rv == 0.0 {
            continue;
        }
        *p.entry(v).or_insert(0.0) += alpha * rv;
        let share = (1.0 - alpha) * rv / deg as f64;
        for &w in adj.neighbors(v) {
            let rw = r.entry(w).or_insert(0.0);
            *rw += share;
            if *rw > eps * adj.degree(w) as f64 && !queued.get(&w).copied().unwrap_or(false) {
                queued.insert(w, true);
                queue.push_back(w);
            }
        }
    }
    let mut out: Vec<(EntityId, f64)> = p.into_iter().filter(|&(_, x)| x > 0.0).collect();
    out.sort_unstable_by_key(|&(e, _)| e);
    Ok(out)
}

/// Center plus the top-`budget` entities by PPR estimate above `theta`,
/// ties broken by ascending id, with all snapshot edges among them.
pub fn ppr_subgraph(adj: &AdjacencyIndex, user: EntityId, cfg: &PprConfig) -> Result<Subgraph> {
    let scores = approx_ppr(adj, user, cfg)?;
    let mut ranked: Vec<(EntityId, f64)> = scores
        .into_iter()
        .filter(|&(e, s)| e != user && s > cfg.theta)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(cfg.budget);
    let picked: Vec<EntityId> = ranked.into_iter().map(|(e, _)| e).collect();
    let sg = Subgraph::induced(adj, user, &picked, SamplerTag::Ppr);
    Ok(if cfg.keep_disconnected {
        sg
    } else {
        sg.center_component(adj)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelationId;

    fn graph(n: usize, edges: &[(u32, u32)]) -> AdjacencyIndex {
        AdjacencyIndex::from_edges(n, edges.iter().map(|&(a, b)| (EntityId(a), EntityId(b), RelationId(0))))
    }

    fn power_iteration(adj: &AdjacencyIndex, s: usize, alpha: f64) -> Vec<f64> {
        let n = adj.num_nodes();
        let mut x = vec![0.0; n];
        x[s] = 1.0;
        for _ in 0..10_000 {
            let mut y = vec![0.0; n];
            y[s] = alpha;
            for u in 0..n {
                let d = adj.degree(EntityId(u as u32));
                for &v in adj.neighbors(EntityId(u as u32)) {
                    y[v.index()] += (1.0 - alpha) * x[u] / d as f64;
                }
            }
            let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            x = y;
            if diff < 1e-14 {
                break;
            }
        }
        x
    }

    #[test]
    fn coarse_tolerance_pushes_seed_once() {
        let adj = graph(3, &[(0, 1), (1, 2)]);
        let cfg = PprConfig {
            eps: Some(1.0),
            ..Default::default()
        };
        assert_eq!(approx_ppr(&adj, EntityId(0), &cfg).unwrap(), vec![(EntityId(0), 0.15)]);
    }

    #[test]
    fn two_node_closed_form() {
        let adj = graph(2, &[(0, 1)]);
        let alpha: f64 = 0.15;
        let pi_s = alpha / (1.0 - (1.0 - alpha).powi(2));
        assert!((pi_s - 0.5405).abs() < 1e-4);
        let eps = 1e-12;
        let cfg = PprConfig {
            alpha,
            eps: Some(eps),
            ..Default::default()
        };
        let p = approx_ppr(&adj, EntityId(0), &cfg).unwrap();
        assert!((p[0].1 - pi_s).abs() <= eps);
        assert!((p[1].1 - (1.0 - pi_s)).abs() <= eps);
    }

    #[test]
    fn five_path_matches_power_iteration() {
        let adj = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let cfg = PprConfig {
            alpha: 0.2,
            eps: Some(1e-7),
            ..Default::default()
        };
        let oracle = power_iteration(&adj, 1, 0.2);
        let p = approx_ppr(&adj, EntityId(1), &cfg).unwrap();
        let mut dense = vec![0.0; 5];
        for (e, x) in p {
            dense[e.index()] = x;
        }
        for v in 0..5 {
            assert!((dense[v] - oracle[v]).abs() < 1e-6);
        }
    }

    #[test]
    fn isolated_seed_is_error() {
        let adj = graph(3, &[(1, 2)]);
        assert!(matches!(
            approx_ppr(&adj, EntityId(0), &PprConfig::default()),
            Err(Error::IsolatedSeed(0))
        ));
    }

    #[test]
    fn subgraph_budget_and_threshold() {
        let adj = graph(2, &[(0, 1)]);
        let cfg = PprConfig {
            budget: 1,
            ..Default::default()
        };
        let sg = ppr_subgraph(&adj, EntityId(0), &cfg).unwrap();
        assert_eq!(sg.entities(), &[EntityId(0), EntityId(1)]);
        assert_eq!(sg.edges().len(), 1);
        let high = PprConfig {
            theta: 2.0,
            ..Default::default()
        };
        let sg = ppr_subgraph(&adj, EntityId(0), &high).unwrap();
        assert_eq!(sg.len(), 1);
        assert!(sg.edges().is_empty());
    }
}
