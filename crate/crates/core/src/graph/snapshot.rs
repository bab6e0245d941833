use std::sync::Arc;

use crate::graph::segment::TimeSegmentation;
use crate::graph::types::{EntityId, EntityKind, Event, EventLog, Registry, StaticTriple};

/// Entity ids grouped by kind, shared by every snapshot of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityLists {
    pub num_entities: usize,
    pub users: Vec<EntityId>,
    pub products: Vec<EntityId>,
    pub queries: Vec<EntityId>,
    pub attributes: Vec<EntityId>,
}

impl EntityLists {
    pub fn from_registry(reg: &Registry) -> Self {
        EntityLists {
            num_entities: reg.num_entities(),
            users: reg.entities_of(EntityKind::User),
            products: reg.entities_of(EntityKind::Product),
            queries: reg.entities_of(EntityKind::Query),
            attributes: reg.entities_of(EntityKind::Attribute),
        }
    }

    pub fn of(&self, kind: EntityKind) -> &[EntityId] {
        match kind {
            EntityKind::User => &self.users,
            EntityKind::Product => &self.products,
            EntityKind::Query => &self.queries,
            EntityKind::Attribute => &self.attributes,
        }
    }
}

/// One step of the evolutionary graph: that step's interactions plus the
/// full static product graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotGraph {
    pub step: usize,
    pub interactions: Vec<Event>,
    pub triples: Arc<[StaticTriple]>,
    pub entities: Arc<EntityLists>,
}

impl SnapshotGraph {
    pub fn num_entities(&self) -> usize {
        self.entities.num_entities
    }

    /// Raw edge count before multi-edge collapsing.
    pub fn edge_count(&self) -> usize {
        self.interactions.len() + self.triples.len()
    }
}

pub fn build_snapshots(
    log: &EventLog,
    seg: &TimeSegmentation,
    triples: &[StaticTriple],
) -> Vec<SnapshotGraph> {
    let triples: Arc<[StaticTriple]> = triples.into();
    let entities = Arc::new(EntityLists::from_registry(&log.registry));
    let mut per_step: Vec<Vec<Event>> = vec![Vec::new(); seg.num_steps()];
    for e in &log.events {
        if let Some(t) = seg.step_of(e.timestamp) {
            per_step[t].push(*e);
        }
    }
    per_step
        .into_iter()
        .enumerate()
        .map(|(step, interactions)| SnapshotGraph {
            step,
            interactions,
            triples: Arc::clone(&triples),
            entities: Arc::clone(&entities),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ingest::{parse_events, parse_triples, ActionSchema, HeadPolicy};
    use crate::graph::segment::{segment_time, Split};
    use std::collections::HashMap;
    use std::path::Path;

    fn fixture() -> (EventLog, Vec<StaticTriple>) {
        let mut log = parse_events(
            "u1 p1 click 1\nu2 p2 click 2\nu1 q1 search 3\nu2 p1 purchase 4\nu1 p2 click 5\nu3 p1 click 6\n",
            Path::new("t"),
            &ActionSchema::default(),
        )
        .unwrap();
        let g = parse_triples(
            "p1\tbrand\tb1\np2\tbrand\tb1\np1\tmatches\tq1\n",
            Path::new("t"),
            &mut log.registry,
            HeadPolicy::Register,
        )
        .unwrap();
        (log, g.triples)
    }

    fn split(t: usize) -> Split {
        Split { background: 0, train: t, val: 0, test: 0 }
    }

    #[test]
    fn single_step_holds_everything() {
        let (log, triples) = fixture();
        let seg = segment_time(&log, 1, split(1)).unwrap();
        let snaps = build_snapshots(&log, &seg, &triples);
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].interactions, log.events);
        assert_eq!(&*snaps[0].triples, &triples[..]);
    }

    #[test]
    fn partition_and_counts() {
        let (log, triples) = fixture();
        let t = 3;
        let seg = segment_time(&log, t, split(t)).unwrap();
        let snaps = build_snapshots(&log, &seg, &triples);
        let total: usize = snaps.iter().map(SnapshotGraph::edge_count).sum();
        assert_eq!(total, log.len() + t * triples.len());

        let last = log.events.last().unwrap();
        for s in &snaps {
            assert_eq!(s.interactions.contains(last), s.step == t - 1);
            for e in &s.interactions {
                assert!(seg.boundaries[s.step] <= e.timestamp && e.timestamp < seg.boundaries[s.step + 1]);
            }
        }

        let mut multiset: HashMap<Event, usize> = HashMap::new();
        for s in &snaps {
            for e in &s.interactions {
                *multiset.entry(*e).or_default() += 1;
            }
        }
        let mut oracle: HashMap<Event, usize> = HashMap::new();
        for e in &log.events {
            *oracle.entry(*e).or_default() += 1;
        }
        assert_eq!(multiset, oracle);
    }
}
