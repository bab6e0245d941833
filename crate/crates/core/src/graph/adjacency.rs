//! Compressed undirected adjacency over all entities of a snapshot.

use std::collections::BTreeMap;

use crate::graph::snapshot::SnapshotGraph;
use crate::graph::types::{EntityId, RelationId};

/// Row-compressed neighbor lists. Every undirected edge is stored in both
/// rows; repeated edges between the same pair collapse into one entry whose
/// `count` records the multiplicity. Rows are sorted by neighbor id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyIndex {
    offsets: Vec<usize>,
    neighbors: Vec<EntityId>,
    relations: Vec<RelationId>,
    counts: Vec<u32>,
}

impl AdjacencyIndex {
    /// Builds from undirected `(u, v, relation)` edges over `n` nodes.
    /// Self-loops are dropped; a collapsed pair keeps its smallest relation.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (EntityId, EntityId, RelationId)>) -> Self {
        let mut pairs: BTreeMap<(u32, u32), (RelationId, u32)> = BTreeMap::new();
        for (u, v, r) in edges {
            if u == v {
                continue;
            }
            let key = (u.0.min(v.0), u.0.max(v.0));
            pairs
                .entry(key)
                .and_modify(|(rel, c)| {
                    *rel = (*rel).min(r);
                    *c += 1;
                })
                .or_insert((r, 1));
        }
        let mut degree = vec![0usize; n];
        for &(a, b) in pairs.keys() {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let m = *offsets.last().unwrap();
        let mut neighbors = vec![EntityId(0); m];
        let mut relations = vec![RelationId(0); m];
        let mut counts = vec![0u32; m];
        let mut fill = offsets[..n].to_vec();
        // BTreeMap order makes each row come out sorted: row a receives b in
        // ascending order, and row b receives a in ascending order of a.
        let mut place = |row: u32, nb: u32, r: RelationId, c: u32| {
            let slot = fill[row as usize];
            neighbors[slot] = EntityId(nb);
            relations[slot] = r;
            counts[slot] = c;
            fill[row as usize] += 1;
        };
        for (&(a, b), &(r, c)) in &pairs {
            place(a, b, r, c);
            place(b, a, r, c);
        }
        let mut adj = AdjacencyIndex {
            offsets,
            neighbors,
            relations,
            counts,
        };
        adj.sort_rows();
        adj
    }

    fn sort_rows(&mut self) {
        for u in 0..self.num_nodes() {
            let (s, e) = (self.offsets[u], self.offsets[u + 1]);
            if self.neighbors[s..e].windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            let mut row: Vec<_> = (s..e)
                .map(|i| (self.neighbors[i], self.relations[i], self.counts[i]))
                .collect();
            row.sort_by_key(|x| x.0);
            for (k, (nb, r, c)) in row.into_iter().enumerate() {
                self.neighbors[s + k] = nb;
                self.relations[s + k] = r;
                self.counts[s + k] = c;
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored directed entries (twice the undirected edge count).
    pub fn num_directed_edges(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, u: EntityId) -> usize {
        self.offsets[u.index() + 1] - self.offsets[u.index()]
    }

    pub fn neighbors(&self, u: EntityId) -> &[EntityId] {
        &self.neighbors[self.offsets[u.index()]..self.offsets[u.index() + 1]]
    }

    pub fn relations(&self, u: EntityId) -> &[RelationId] {
        &self.relations[self.offsets[u.index()]..self.offsets[u.index() + 1]]
    }

    pub fn counts(&self, u: EntityId) -> &[u32] {
        &self.counts[self.offsets[u.index()]..self.offsets[u.index() + 1]]
    }

    pub fn has_edge(&self, u: EntityId, v: EntityId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

pub fn to_adjacency(snap: &SnapshotGraph) -> AdjacencyIndex {
    let interactions = snap
        .interactions
        .iter()
        .map(|e| (e.user, e.target, e.relation));
    let statics = snap.triples.iter().map(|t| (t.head, t.tail, t.relation));
    AdjacencyIndex::from_edges(snap.num_entities(), interactions.chain(statics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeSet;

    fn e(i: u32) -> EntityId {
        EntityId(i)
    }

    #[test]
    fn single_edge() {
        let adj = AdjacencyIndex::from_edges(2, [(e(0), e(1), RelationId(0))]);
        assert_eq!(adj.degree(e(0)), 1);
        assert_eq!(adj.degree(e(1)), 1);
        assert_eq!(adj.num_directed_edges(), 2);
    }

    #[test]
    fn triangle() {
        let r = RelationId(0);
        let adj = AdjacencyIndex::from_edges(3, [(e(0), e(1), r), (e(1), e(2), r), (e(2), e(0), r)]);
        assert!((0..3).all(|i| adj.degree(e(i)) == 2));
    }

    #[test]
    fn multi_edges_collapse_with_count() {
        let adj = AdjacencyIndex::from_edges(
            2,
            [(e(0), e(1), RelationId(3)), (e(1), e(0), RelationId(1)), (e(0), e(1), RelationId(2))],
        );
        assert_eq!(adj.degree(e(0)), 1);
        assert_eq!(adj.counts(e(0)), &[3]);
        assert_eq!(adj.relations(e(1)), &[RelationId(1)]);
    }

    #[test]
    fn random_fixture_matches_edge_list_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10u32;
        let edges: Vec<(u32, u32)> = (0..25).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        let adj = AdjacencyIndex::from_edges(n as usize, edges.iter().map(|&(a, b)| (e(a), e(b), RelationId(0))));
        for u in 0..n {
            let oracle: BTreeSet<u32> = edges
                .iter()
                .filter_map(|&(a, b)| {
                    if a == b {
                        None
                    } else if a == u {
                        Some(b)
                    } else if b == u {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect();
            let got: Vec<u32> = adj.neighbors(e(u)).iter().map(|x| x.0).collect();
            assert_eq!(got, oracle.into_iter().collect::<Vec<_>>());
            for &v in adj.neighbors(e(u)) {
                assert!(adj.has_edge(v, e(u)));
            }
        }
        assert!(adj.offsets().windows(2).all(|w| w[0] <= w[1]));
    }
}
