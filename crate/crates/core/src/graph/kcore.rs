//! Interaction k-core filtering.
//!
//! Peels users, products and queries with fewer than `m` interaction events
//! until a fixpoint. Attribute entities never carry events and are kept.

use crate::graph::types::{EntityKind, Event, EventLog};

pub fn k_core_filter(log: &EventLog, min_interactions: usize) -> EventLog {
    let min = min_interactions.max(1);
    let n = log.registry.num_entities();
    let mut count = vec![0usize; n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in log.events.iter().enumerate() {
        count[e.user.index()] += 1;
        count[e.target.index()] += 1;
        incident[e.user.index()].push(i);
        incident[e.target.index()].push(i);
    }

    let peelable = |k: EntityKind| k != EntityKind::Attribute;
    let mut removed = vec![false; n];
    let mut event_alive = vec![true; log.events.len()];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&v| peelable(log.registry.kind(crate::graph::EntityId(v as u32))) && count[v] < min)
        .collect();
    for &v in &stack {
        removed[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &ei in &incident[v] {
            if !event_alive[ei] {
                continue;
            }
            event_alive[ei] = false;
            let Event { user, target, .. } = log.events[ei];
            for other in [user.index(), target.index()] {
                if other == v {
                    continue;
                }
                count[other] -= 1;
                if !removed[other] && count[other] < min {
                    removed[other] = true;
                    stack.push(other);
                }
            }
        }
    }

    let (registry, remap) = log.registry.retain_entities(|id| !removed[id.index()]);
    let events = log
        .events
        .iter()
        .zip(&event_alive)
        .filter(|(_, &alive)| alive)
        .map(|(e, _)| Event {
            user: remap[e.user.index()].expect("live event endpoints survive"),
            target: remap[e.target.index()].expect("live event endpoints survive"),
            ..*e
        })
        .collect();
    EventLog { events, registry }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ingest::{parse_events, ActionSchema};
    use std::collections::HashMap;
    use std::path::Path;

    fn log(text: &str) -> EventLog {
        parse_events(text, Path::new("t"), &ActionSchema::default()).unwrap()
    }

    fn names(l: &EventLog) -> Vec<(String, String, i64)> {
        l.events
            .iter()
            .map(|e| {
                (
                    l.registry.name(e.user).to_string(),
                    l.registry.name(e.target).to_string(),
                    e.timestamp,
                )
            })
            .collect()
    }

    #[test]
    fn threshold_one_is_noop() {
        let l = log("u1 p1 click 1\nu2 p2 click 2\nu1 q1 search 3\n");
        let f = k_core_filter(&l, 1);
        assert_eq!(names(&f), names(&l));
    }

    #[test]
    fn star_collapses() {
        let text: String = (0..5).map(|i| format!("u p{i} click {i}\n")).collect();
        let f = k_core_filter(&log(&text), 2);
        assert!(f.is_empty());
        assert_eq!(f.registry.num_entities(), 0);
    }

    #[test]
    fn shared_square_survives() {
        let l = log("u1 p1 click 1\nu1 p2 click 2\nu2 p1 click 3\nu2 p2 click 4\n");
        let f = k_core_filter(&l, 2);
        assert_eq!(names(&f), names(&l));
        assert_eq!(f.registry, l.registry);
    }

    #[test]
    fn survivors_meet_threshold() {
        // u3 hangs off p1 with a single event and p3 only has one event.
        let l = log("u1 p1 click 1\nu1 p2 click 2\nu2 p1 click 3\nu2 p2 click 4\nu3 p1 click 5\nu3 p3 click 6\n");
        let f = k_core_filter(&l, 2);
        let mut counts: HashMap<_, usize> = HashMap::new();
        for e in &f.events {
            *counts.entry(e.user).or_default() += 1;
            *counts.entry(e.target).or_default() += 1;
        }
        assert!(counts.values().all(|&c| c >= 2));
        assert_eq!(f.len(), 4);
        assert!(f.registry.lookup("u3").is_none());
    }
}
