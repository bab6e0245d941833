use std::collections::VecDeque;
use std::fmt;

use crate::graph::{AdjacencyIndex, EntityId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerTag {
    Ppr,
    Khop,
    /// Isolated center with no edges in the snapshot.
    Singleton,
}

impl SamplerTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerTag::Ppr => "ppr",
            SamplerTag::Khop => "khop",
            SamplerTag::Singleton => "singleton",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SamplerTag::Ppr),
            1 => Some(SamplerTag::Khop),
            2 => Some(SamplerTag::Singleton),
            _ => None,
        }
    }
}

impl fmt::Display for SamplerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A user-centered induced subgraph.
///
/// Local index 0 is always the center; the remaining entities follow in
/// ascending global id. Edges are local pairs `(a, b)` with `a < b`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    entities: Vec<EntityId>,
    edges: Vec<(u32, u32)>,
    pub source: SamplerTag,
}

impl Subgraph {
    pub fn singleton(center: EntityId, source: SamplerTag) -> Self {
        Subgraph {
            entities: vec![center],
            edges: Vec::new(),
            source,
        }
    }

    /// Induced subgraph of `adj` on `center ∪ selected`.
    pub fn induced(adj: &AdjacencyIndex, center: EntityId, selected: &[EntityId], source: SamplerTag) -> Self {
        let mut rest: Vec<EntityId> = selected.iter().copied().filter(|&e| e != center).collect();
        rest.sort_unstable();
        rest.dedup();
        let mut entities = Vec::with_capacity(rest.len() + 1);
        entities.push(center);
        entities.extend(rest);
        let mut sg = Subgraph {
            entities,
            edges: Vec::new(),
            source,
        };
        let mut edges = Vec::new();
        for (a, &ga) in sg.entities.iter().enumerate() {
            for &nb in adj.neighbors(ga) {
                if let Some(b) = sg.local(nb) {
                    if a < b {
                        edges.push((a as u32, b as u32));
                    }
                }
            }
        }
        edges.sort_unstable();
        sg.edges = edges;
        sg
    }

    /// Rebuilds from raw parts, re-canonicalizing order. Used by the cache
    /// reader and by tests that construct subgraphs by hand.
    pub fn from_parts(center: EntityId, others: &[EntityId], global_edges: &[(EntityId, EntityId)], source: SamplerTag) -> Self {
        let mut rest: Vec<EntityId> = others.iter().copied().filter(|&e| e != center).collect();
        rest.sort_unstable();
        rest.dedup();
        let mut entities = vec![center];
        entities.extend(rest);
        let mut sg = Subgraph {
            entities,
            edges: Vec::new(),
            source,
        };
        let mut edges: Vec<(u32, u32)> = global_edges
            .iter()
            .filter_map(|&(u, v)| {
                let (a, b) = (sg.local(u)?, sg.local(v)?);
                (a != b).then(|| (a.min(b) as u32, a.max(b) as u32))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        sg.edges = edges;
        sg
    }

    pub fn center(&self) -> EntityId {
        self.entities[0]
    }

    /// Local → global map.
    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn global_edges(&self) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.entities[a as usize], self.entities[b as usize]))
    }

    pub fn local(&self, g: EntityId) -> Option<usize> {
        if self.entities[0] == g {
            return Some(0);
        }
        self.entities[1..].binary_search(&g).ok().map(|i| i + 1)
    }

    pub fn contains(&self, g: EntityId) -> bool {
        self.local(g).is_some()
    }

    /// Local neighbor lists, each sorted.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            nb[a as usize].push(b as usize);
            nb[b as usize].push(a as usize);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        for &(a, b) in &self.edges {
            d[a as usize] += 1;
            d[b as usize] += 1;
        }
        d
    }

    /// Local indices reachable from the center through subgraph edges.
    pub fn reachable_from_center(&self) -> Vec<bool> {
        let nb = self.neighbor_lists();
        let mut seen = vec![false; self.len()];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        while let Some(u) = q.pop_front() {
            for &v in &nb[u] {
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }

    /// Restricts to the center's connected component.
    pub fn center_component(&self, adj: &AdjacencyIndex) -> Subgraph {
        let seen = self.reachable_from_center();
        if seen.iter().all(|&s| s) {
            return self.clone();
        }
        let keep: Vec<EntityId> = self
            .entities
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| s)
            .map(|(&e, _)| e)
            .collect();
        Subgraph::induced(adj, self.center(), &keep, self.source)
    }

    /// Canonical byte encoding; equal subgraphs encode identically.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 4 * self.entities.len() + 8 * self.edges.len());
        out.push(self.source.code());
        out.extend_from_slice(&(self.entities.len() as u32).to_le_bytes());
        for e in &self.entities {
            out.extend_from_slice(&e.0.to_le_bytes());
        }
        out.extend_from_slice(&(self.edges.len() as u32).to_le_bytes());
        for &(a, b) in &self.edges {
            out.extend_from_slice(&a.to_le_bytes());
            out.extend_from_slice(&b.to_le_bytes());
        }
        out
    }

    pub(crate) fn from_raw(entities: Vec<EntityId>, edges: Vec<(u32, u32)>, source: SamplerTag) -> Option<Self> {
        let n = entities.len() as u32;
        if n == 0
            || !entities[1..].windows(2).all(|w| w[0] < w[1])
            || edges.iter().any(|&(a, b)| a >= b || b >= n)
            || !edges.windows(2).all(|w| w[0] < w[1])
        {
            return None;
        }
        Some(Subgraph {
            entities,
            edges,
            source,
        })
    }
}
