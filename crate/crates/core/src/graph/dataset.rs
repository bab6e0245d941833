//! A fully prepared dataset (registry, segmentation, snapshots) and its
//! on-disk store.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::adjacency::{to_adjacency, AdjacencyIndex};
use crate::graph::ingest::{export_registry, import_registry, write_file};
use crate::graph::segment::TimeSegmentation;
use crate::graph::snapshot::{build_snapshots, EntityLists, SnapshotGraph};
use crate::graph::types::{EntityId, EntityKind, Event, EventLog, Registry, RelationId, StaticTriple};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub registry: Registry,
    pub segmentation: TimeSegmentation,
    pub triples: Vec<StaticTriple>,
    pub snapshots: Vec<SnapshotGraph>,
}

/// Counts in the layout of the usual dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub users: usize,
    pub products: usize,
    pub queries: usize,
    pub entities: usize,
    pub product_interactions: usize,
    pub query_interactions: usize,
    pub triples: usize,
}

impl Dataset {
    pub fn new(log: &EventLog, segmentation: TimeSegmentation, triples: Vec<StaticTriple>) -> Self {
        let snapshots = build_snapshots(log, &segmentation, &triples);
        Dataset {
            registry: log.registry.clone(),
            segmentation,
            triples,
            snapshots,
        }
    }

    pub fn num_steps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn num_entities(&self) -> usize {
        self.registry.num_entities()
    }

    pub fn entities(&self) -> &EntityLists {
        &self.snapshots[0].entities
    }

    pub fn adjacency(&self, step: usize) -> AdjacencyIndex {
        to_adjacency(&self.snapshots[step])
    }

    pub fn stats(&self) -> DatasetStats {
        let mut product_interactions = 0;
        let mut query_interactions = 0;
        for s in &self.snapshots {
            for e in &s.interactions {
                match self.registry.kind(e.target) {
                    EntityKind::Product => product_interactions += 1,
                    _ => query_interactions += 1,
                }
            }
        }
        DatasetStats {
            users: self.registry.count(EntityKind::User),
            products: self.registry.count(EntityKind::Product),
            queries: self.registry.count(EntityKind::Query),
            entities: self.registry.num_entities(),
            product_interactions,
            query_interactions,
            triples: self.triples.len(),
        }
    }

    /// Writes `entities.tsv`, `relations.tsv`, `snapshots.tsv`,
    /// `triples.tsv` and `segmentation.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        export_registry(&self.registry, dir)?;
        let mut ev = String::from("# step\tuser\ttarget\trelation\ttimestamp\n");
        for s in &self.snapshots {
            for e in &s.interactions {
                ev.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    s.step, e.user.0, e.target.0, e.relation.0, e.timestamp
                ));
            }
        }
        write_file(&dir.join("snapshots.tsv"), ev.as_bytes())?;
        let mut tr = String::from("# head\trelation\ttail\n");
        for t in &self.triples {
            tr.push_str(&format!("{}\t{}\t{}\n", t.head.0, t.relation.0, t.tail.0));
        }
        write_file(&dir.join("triples.tsv"), tr.as_bytes())?;
        let seg = serde_json::to_string_pretty(&self.segmentation)
            .map_err(|e| Error::Config(e.to_string()))?;
        write_file(&dir.join("segmentation.json"), seg.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let registry = import_registry(dir)?;
        let seg_path = dir.join("segmentation.json");
        let seg_text = fs::read_to_string(&seg_path).map_err(|e| Error::io(&seg_path, e))?;
        let segmentation: TimeSegmentation =
            serde_json::from_str(&seg_text).map_err(|e| Error::Format {
                what: "segmentation.json",
                message: e.to_string(),
            })?;

        let n = registry.num_entities() as u32;
        let nrel = registry.num_relations() as u32;
        let ids = |path: &Path, line: usize, fields: &[&str]| -> Result<Vec<i64>> {
            fields
                .iter()
                .map(|f| {
                    f.parse::<i64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("bad integer '{f}'"),
                    })
                })
                .collect()
        };
        let check = |path: &Path, line: usize, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "id out of range".into(),
                })
            }
        };

        let tr_path = dir.join("triples.tsv");
        let mut triples = Vec::new();
        for (i, line) in fs::read_to_string(&tr_path)
            .map_err(|e| Error::io(&tr_path, e))?
            .lines()
            .enumerate()
        {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let v = ids(&tr_path, i + 1, &f)?;
            check(&tr_path, i + 1, v.len() == 3 && (v[0] as u32) < n && (v[1] as u32) < nrel && (v[2] as u32) < n)?;
            triples.push(StaticTriple {
                head: EntityId(v[0] as u32),
                relation: RelationId(v[1] as u32),
                tail: EntityId(v[2] as u32),
            });
        }

        let ev_path = dir.join("snapshots.tsv");
        let mut log = EventLog {
            events: Vec::new(),
            registry,
        };
        for (i, line) in fs::read_to_string(&ev_path)
            .map_err(|e| Error::io(&ev_path, e))?
            .lines()
            .enumerate()
        {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let v = ids(&ev_path, i + 1, &f)?;
            check(&ev_path, i + 1, v.len() == 5 && (v[1] as u32) < n && (v[2] as u32) < n && (v[3] as u32) < nrel)?;
            let e = Event {
                user: EntityId(v[1] as u32),
                target: EntityId(v[2] as u32),
                relation: RelationId(v[3] as u32),
                timestamp: v[4],
            };
            check(&ev_path, i + 1, segmentation.step_of(e.timestamp) == Some(v[0] as usize))?;
            log.events.push(e);
        }
        log.sort();
        Ok(Dataset::new(&log, segmentation, triples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ingest::{parse_events, parse_triples, ActionSchema, HeadPolicy};
    use crate::graph::segment::{segment_time, Split};

    #[test]
    fn store_roundtrip() {
        let mut log = parse_events(
            "u1 p1 click 1\nu2 p2 click 2\nu1 q1 search 3\nu2 p1 purchase 4\n",
            Path::new("t"),
            &ActionSchema::default(),
        )
        .unwrap();
        let g = parse_triples("p1\tbrand\tb1\n", Path::new("t"), &mut log.registry, HeadPolicy::Register).unwrap();
        let seg = segment_time(&log, 2, Split { background: 1, train: 1, val: 0, test: 0 }).unwrap();
        let ds = Dataset::new(&log, seg, g.triples);
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(back.snapshots, ds.snapshots);
        assert_eq!(back.registry, ds.registry);
        let st = back.stats();
        assert_eq!((st.users, st.products, st.queries, st.entities, st.triples), (2, 2, 1, 6, 1));
        assert_eq!((st.product_interactions, st.query_interactions), (3, 1));
    }
}
