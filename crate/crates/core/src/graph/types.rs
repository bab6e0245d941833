use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense entity index, contiguous within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    User,
    Product,
    Query,
    Attribute,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::User,
        EntityKind::Product,
        EntityKind::Query,
        EntityKind::Attribute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::User => "user",
            EntityKind::Product => "product",
            EntityKind::Query => "query",
            EntityKind::Attribute => "attribute",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "user" => Ok(EntityKind::User),
            "product" => Ok(EntityKind::Product),
            "query" => Ok(EntityKind::Query),
            "attribute" => Ok(EntityKind::Attribute),
            other => Err(Error::Unknown {
                kind: "entity kind",
                id: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interaction relations connect users to products/queries at a point in
/// time; static relations belong to the product graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Interaction,
    Static,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Interaction => "interaction",
            RelationKind::Static => "static",
        }
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "interaction" => Ok(RelationKind::Interaction),
            "static" => Ok(RelationKind::Static),
            other => Err(Error::Unknown {
                kind: "relation kind",
                id: other.to_string(),
            }),
        }
    }
}

/// A timestamped user interaction `(user, relation, target, timestamp)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub user: EntityId,
    pub target: EntityId,
    pub relation: RelationId,
    pub timestamp: i64,
}

/// A product-graph fact `(product, relation, attribute-or-query)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StaticTriple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub name: String,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRecord {
    pub name: String,
    pub kind: RelationKind,
}

/// Name ↔ id maps for entities and relations. Names share one namespace
/// across entity kinds, so a name always denotes a single entity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entities: Vec<EntityRecord>,
    entity_index: HashMap<String, EntityId>,
    relations: Vec<RelationRecord>,
    relation_index: HashMap<String, RelationId>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity(&self, id: EntityId) -> &EntityRecord {
        &self.entities[id.index()]
    }

    pub fn kind(&self, id: EntityId) -> EntityKind {
        self.entities[id.index()].kind
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.entities[id.index()].name
    }

    pub fn lookup(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn relation(&self, id: RelationId) -> &RelationRecord {
        &self.relations[id.index()]
    }

    pub fn lookup_relation(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = (EntityId, &EntityRecord)> {
        self.entities
            .iter()
            .enumerate()
            .map(|(i, r)| (EntityId(i as u32), r))
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelationId, &RelationRecord)> {
        self.relations
            .iter()
            .enumerate()
            .map(|(i, r)| (RelationId(i as u32), r))
    }

    pub fn entities_of(&self, kind: EntityKind) -> Vec<EntityId> {
        self.entities()
            .filter(|(_, r)| r.kind == kind)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        self.entities.iter().filter(|r| r.kind == kind).count()
    }

    /// Returns the id for `name`, registering it with `kind` on first sight.
    pub fn intern(&mut self, name: &str, kind: EntityKind) -> Result<EntityId> {
        if let Some(id) = self.lookup(name) {
            let existing = self.kind(id);
            if existing != kind {
                return Err(Error::KindConflict {
                    name: name.to_string(),
                    existing: existing.to_string(),
                    requested: kind.to_string(),
                });
            }
            return Ok(id);
        }
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(EntityRecord {
            name: name.to_string(),
            kind,
        });
        self.entity_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn intern_relation(&mut self, name: &str, kind: RelationKind) -> Result<RelationId> {
        if let Some(id) = self.lookup_relation(name) {
            let existing = self.relations[id.index()].kind;
            if existing != kind {
                return Err(Error::Config(format!(
                    "relation '{name}' is {} but was used as {}",
                    existing.as_str(),
                    kind.as_str()
                )));
            }
            return Ok(id);
        }
        let id = RelationId(self.relations.len() as u32);
        self.relations.push(RelationRecord {
            name: name.to_string(),
            kind,
        });
        self.relation_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub(crate) fn retain_entities(&self, keep: impl Fn(EntityId) -> bool) -> (Registry, Vec<Option<EntityId>>) {
        let mut out = Registry {
            relations: self.relations.clone(),
            relation_index: self.relation_index.clone(),
            ..Registry::default()
        };
        let mut remap = vec![None; self.entities.len()];
        for (id, rec) in self.entities() {
            if keep(id) {
                let new = out
                    .intern(&rec.name, rec.kind)
                    .expect("names are unique in the source registry");
                remap[id.index()] = Some(new);
            }
        }
        (out, remap)
    }
}

/// Timestamp-sorted interaction events with their registries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub registry: Registry,
}

impl EventLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Restores timestamp order. The sort is stable so same-timestamp events
    /// keep file order.
    pub fn sort(&mut self) {
        self.events.sort_by_key(|e| e.timestamp);
    }

    pub fn is_sorted(&self) -> bool {
        self.events
            .windows(2)
            .all(|w| w[0].timestamp <= w[1].timestamp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intern_is_idempotent_and_kind_checked() {
        let mut reg = Registry::new();
        let a = reg.intern("u1", EntityKind::User).unwrap();
        assert_eq!(reg.intern("u1", EntityKind::User).unwrap(), a);
        let err = reg.intern("u1", EntityKind::Product).unwrap_err();
        assert!(matches!(err, Error::KindConflict { .. }));
        let p = reg.intern("p1", EntityKind::Product).unwrap();
        assert_eq!(p, EntityId(1));
        assert_eq!(reg.entities_of(EntityKind::Product), vec![p]);
    }

    #[test]
    fn retain_redensifies_in_order() {
        let mut reg = Registry::new();
        for n in ["a", "b", "c", "d"] {
            reg.intern(n, EntityKind::Query).unwrap();
        }
        let (out, remap) = reg.retain_entities(|id| id.0 % 2 == 1);
        assert_eq!(out.num_entities(), 2);
        assert_eq!(out.name(EntityId(0)), "b");
        assert_eq!(remap, vec![None, Some(EntityId(0)), None, Some(EntityId(1))]);
    }
}
