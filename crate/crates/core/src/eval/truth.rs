use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Dataset, EntityId, EntityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Product,
    Query,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Product, Task::Query];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Product => "product",
            Task::Query => "query",
        }
    }

    pub fn kind(self) -> EntityKind {
        match self {
            Task::Product => EntityKind::Product,
            Task::Query => EntityKind::Query,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Task::Product),
            "query" => Ok(Task::Query),
            _ => Err(Error::Config(format!("unknown task '{s}'"))),
        }
    }
}

/// Interacted products and queries per (user, step), sorted and distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    sets: BTreeMap<(EntityId, usize, Task), Vec<EntityId>>,
}

impl GroundTruth {
    pub fn from_dataset(data: &Dataset) -> Self {
        let mut acc: BTreeMap<(EntityId, usize, Task), BTreeSet<EntityId>> = BTreeMap::new();
        for snap in &data.snapshots {
            for e in &snap.interactions {
                let task = match data.registry.kind(e.target) {
                    EntityKind::Product => Task::Product,
                    EntityKind::Query => Task::Query,
                    _ => continue,
                };
                acc.entry((e.user, snap.step, task)).or_default().insert(e.target);
            }
        }
        GroundTruth {
            sets: acc.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
        }
    }

    pub fn insert(&mut self, user: EntityId, step: usize, task: Task, mut items: Vec<EntityId>) {
        items.sort_unstable();
        items.dedup();
        if items.is_empty() {
            self.sets.remove(&(user, step, task));
        } else {
            self.sets.insert((user, step, task), items);
        }
    }

    /// Empty when the user did not interact with that task at that step.
    pub fn get(&self, user: EntityId, step: usize, task: Task) -> &[EntityId] {
        self.sets.get(&(user, step, task)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Users with any interaction in `steps`.
    pub fn users_in(&self, steps: std::ops::Range<usize>) -> BTreeSet<EntityId> {
        self.sets
            .keys()
            .filter(|(_, t, _)| steps.contains(t))
            .map(|(u, _, _)| *u)
            .collect()
    }
}
