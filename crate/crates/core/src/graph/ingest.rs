//! Readers for the event and product-graph TSV formats and the registry
//! export.
//!
//! Event lines are `user<TAB>target<TAB>action<TAB>timestamp`. Lines whose
//! first non-blank character is `#` are comments, except for the action
//! declaration `# actions: click=product search=query ...`, which maps
//! action names to the kind of entity they target. Lines without a tab are
//! split on whitespace instead.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::types::{
    EntityId, EntityKind, Event, EventLog, Registry, RelationKind, StaticTriple,
};

/// Maps action names to the entity kind they target (product or query).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    actions: BTreeMap<String, EntityKind>,
}

impl Default for ActionSchema {
    fn default() -> Self {
        let mut schema = Self::empty();
        for a in [
            "click",
            "add_cart",
            "add-cart",
            "purchase",
            "follow_on_click",
            "follow-on-click",
            "review",
        ] {
            schema.actions.insert(a.to_string(), EntityKind::Product);
        }
        for a in ["search", "type_query", "type-query", "query"] {
            schema.actions.insert(a.to_string(), EntityKind::Query);
        }
        schema
    }
}

impl ActionSchema {
    pub fn empty() -> Self {
        Self {
            actions: BTreeMap::new(),
        }
    }

    pub fn declare(&mut self, action: &str, kind: EntityKind) -> Result<()> {
        if !matches!(kind, EntityKind::Product | EntityKind::Query) {
            return Err(Error::Config(format!(
                "action '{action}' must target a product or a query, not a {kind}"
            )));
        }
        self.actions.insert(action.to_string(), kind);
        Ok(())
    }

    pub fn target_kind(&self, action: &str) -> Option<EntityKind> {
        self.actions.get(action).copied()
    }

    /// Parses `name=kind` pairs separated by whitespace or commas.
    pub fn parse_declarations(&mut self, text: &str) -> Result<()> {
        for item in text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
        {
            let (name, kind) = item.split_once('=').ok_or_else(|| {
                Error::Config(format!("action declaration '{item}' is not name=kind"))
            })?;
            self.declare(name.trim(), kind.parse()?)?;
        }
        Ok(())
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads an event log using the default action schema, extended by any
/// `# actions:` declarations in the file.
pub fn ingest_events(path: &Path) -> Result<EventLog> {
    ingest_events_with(path, &ActionSchema::default())
}

pub fn ingest_events_with(path: &Path, schema: &ActionSchema) -> Result<EventLog> {
    let text = read(path)?;
    parse_events(&text, path, schema)
}

pub(crate) fn parse_events(text: &str, path: &Path, schema: &ActionSchema) -> Result<EventLog> {
    let mut schema = schema.clone();
    let mut log = EventLog::default();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(decl) = comment.trim().strip_prefix("actions:") {
                schema
                    .parse_declarations(decl)
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
            }
            continue;
        }
        let fields = split_fields(line);
        if fields.len() != 4 {
            return Err(parse_err(
                lineno,
                format!("expected 4 fields (user, target, action, timestamp), found {}", fields.len()),
            ));
        }
        if log.is_empty() && fields == ["user_id", "target_id", "action", "timestamp"] {
            continue;
        }
        let (user, target, action, ts) = (fields[0], fields[1], fields[2], fields[3]);
        let kind = schema.target_kind(action).ok_or_else(|| Error::UnknownAction {
            path: path.to_path_buf(),
            line: lineno,
            action: action.to_string(),
        })?;
        let timestamp: i64 = ts
            .parse()
            .map_err(|_| parse_err(lineno, format!("non-numeric timestamp '{ts}'")))?;
        if timestamp < 0 {
            return Err(parse_err(lineno, format!("negative timestamp {timestamp}")));
        }
        let reg = &mut log.registry;
        let user = reg
            .intern(user, EntityKind::User)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let target = reg
            .intern(target, kind)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let relation = reg
            .intern_relation(action, RelationKind::Interaction)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        log.events.push(Event {
            user,
            target,
            relation,
            timestamp,
        });
    }
    log.sort();
    Ok(log)
}

/// What to do with a triple whose head product is not yet registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadPolicy {
    /// Register the head as a new product.
    #[default]
    Register,
    /// Drop the triple (used after k-core filtering removed the product).
    Skip,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProductGraph {
    pub triples: Vec<StaticTriple>,
    pub skipped: usize,
}

/// Reads `head<TAB>relation<TAB>tail` triples, registering heads as
/// products and tails as attributes unless the tail is already a query.
pub fn ingest_product_graph(path: &Path, log: &mut EventLog) -> Result<Vec<StaticTriple>> {
    Ok(ingest_product_graph_with(path, log, HeadPolicy::Register)?.triples)
}

pub fn ingest_product_graph_with(
    path: &Path,
    log: &mut EventLog,
    policy: HeadPolicy,
) -> Result<ProductGraph> {
    let text = read(path)?;
    parse_triples(&text, path, &mut log.registry, policy)
}

pub(crate) fn parse_triples(
    text: &str,
    path: &Path,
    reg: &mut Registry,
    policy: HeadPolicy,
) -> Result<ProductGraph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = ProductGraph::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields (head, relation, tail), found {}", fields.len()),
            ));
        }
        let (head, rel, tail) = (fields[0], fields[1], fields[2]);
        let head = match reg.lookup(head) {
            Some(id) if reg.kind(id) == EntityKind::Product => id,
            Some(id) => {
                return Err(parse_err(
                    lineno,
                    format!("head '{head}' is a {}, expected a product", reg.kind(id)),
                ))
            }
            None if policy == HeadPolicy::Skip => {
                out.skipped += 1;
                continue;
            }
            None => reg
                .intern(head, EntityKind::Product)
                .map_err(|e| parse_err(lineno, e.to_string()))?,
        };
        let tail = match reg.lookup(tail) {
            Some(id) if matches!(reg.kind(id), EntityKind::Query | EntityKind::Attribute) => id,
            Some(id) => {
                return Err(parse_err(
                    lineno,
                    format!("tail '{tail}' is a {}, expected an attribute or query", reg.kind(id)),
                ))
            }
            None => reg
                .intern(tail, EntityKind::Attribute)
                .map_err(|e| parse_err(lineno, e.to_string()))?,
        };
        let relation = reg
            .intern_relation(rel, RelationKind::Static)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let triple = StaticTriple {
            head,
            relation,
            tail,
        };
        if seen.insert(triple) {
            out.triples.push(triple);
        }
    }
    Ok(out)
}

/// Writes `entities.tsv` and `relations.tsv` into `dir`.
pub fn export_registry(reg: &Registry, dir: &Path) -> Result<()> {
    let mut ent = String::from("# id\tname\tkind\n");
    for (id, rec) in reg.entities() {
        ent.push_str(&format!("{}\t{}\t{}\n", id.0, rec.name, rec.kind));
    }
    let mut rel = String::from("# id\tname\tkind\n");
    for (id, rec) in reg.relations() {
        rel.push_str(&format!("{}\t{}\t{}\n", id.0, rec.name, rec.kind.as_str()));
    }
    write_file(&dir.join("entities.tsv"), ent.as_bytes())?;
    write_file(&dir.join("relations.tsv"), rel.as_bytes())
}

/// Reads back a registry written by [`export_registry`].
pub fn import_registry(dir: &Path) -> Result<Registry> {
    let mut reg = Registry::new();
    let ent_path = dir.join("entities.tsv");
    for (i, line) in read(&ent_path)?.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || Error::Parse {
            path: ent_path.clone(),
            line: i + 1,
            message: "expected id, name, kind".into(),
        };
        if f.len() != 3 {
            return Err(bad());
        }
        let id: u32 = f[0].parse().map_err(|_| bad())?;
        let got = reg.intern(f[1], f[2].parse()?)?;
        if got.0 != id {
            return Err(bad());
        }
    }
    let rel_path = dir.join("relations.tsv");
    for (i, line) in read(&rel_path)?.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || Error::Parse {
            path: rel_path.clone(),
            line: i + 1,
            message: "expected id, name, kind".into(),
        };
        if f.len() != 3 {
            return Err(bad());
        }
        let id: u32 = f[0].parse().map_err(|_| bad())?;
        let got = reg.intern_relation(f[1], f[2].parse()?)?;
        if got.0 != id {
            return Err(bad());
        }
    }
    Ok(reg)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Resolves an entity by external name.
pub fn resolve(reg: &Registry, name: &str) -> Result<EntityId> {
    reg.lookup(name).ok_or_else(|| Error::Unknown {
        kind: "entity",
        id: name.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("fixture.tsv")
    }

    #[test]
    fn header_only_file_is_empty() {
        let log = parse_events("# actions: click=product\n", &p(), &ActionSchema::default()).unwrap();
        assert_eq!(log.len(), 0);
        assert_eq!(log.registry.num_entities(), 0);
    }

    #[test]
    fn single_line() {
        let log = parse_events("u1 p1 click 100\n", &p(), &ActionSchema::default()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.registry.num_entities(), 2);
        assert_eq!(log.registry.kind(EntityId(0)), EntityKind::User);
        assert_eq!(log.registry.kind(EntityId(1)), EntityKind::Product);
        assert_eq!(log.registry.num_relations(), 1);
    }

    #[test]
    fn events_come_back_sorted() {
        let text = "u1\tp1\tclick\t300\nu2\tp2\tclick\t100\nu1\tq1\tsearch\t200\n";
        let log = parse_events(text, &p(), &ActionSchema::default()).unwrap();
        let ts: Vec<i64> = log.events.iter().map(|e| e.timestamp).collect();
        let mut oracle = vec![300, 100, 200];
        oracle.sort();
        assert_eq!(ts, oracle);
        // ids stay first-seen even though events were reordered
        assert_eq!(log.registry.name(EntityId(0)), "u1");
        assert_eq!(log.registry.kind(EntityId(4)), EntityKind::Query);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_events("u1 p1 click 1\nu1 p1 click\n", &p(), &ActionSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_events("u1 p1 wink 1\n", &p(), &ActionSchema::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownAction { line: 1, .. }));
        let err = parse_events("u1 p1 click abc\n", &p(), &ActionSchema::default()).unwrap_err();
        assert!(err.to_string().contains("non-numeric"));
    }

    #[test]
    fn header_declares_actions() {
        let text = "# actions: wink=product, stare=query\nu1 p1 wink 5\nu1 q1 stare 6\n";
        let log = parse_events(text, &p(), &ActionSchema::empty()).unwrap();
        assert_eq!(log.registry.kind(EntityId(2)), EntityKind::Query);
    }

    #[test]
    fn product_graph_registration_and_dedup() {
        let mut log = parse_events("u1 p1 click 1\nu1 q1 search 2\n", &p(), &ActionSchema::default()).unwrap();
        let empty = parse_triples("", &p(), &mut log.registry, HeadPolicy::Register).unwrap();
        assert!(empty.triples.is_empty());

        let text = "p1\thas_brand\tb1\np1\thas_brand\tb1\np1\tmatches\tq1\n";
        let g = parse_triples(text, &p(), &mut log.registry, HeadPolicy::Register).unwrap();
        let distinct: HashSet<&str> = text.lines().collect();
        assert_eq!(g.triples.len(), distinct.len());
        let b1 = log.registry.lookup("b1").unwrap();
        assert_eq!(log.registry.kind(b1), EntityKind::Attribute);
        assert_eq!(g.triples[1].tail, log.registry.lookup("q1").unwrap());

        let err = parse_triples("u1\thas_brand\tb1\n", &p(), &mut log.registry, HeadPolicy::Register).unwrap_err();
        assert!(err.to_string().contains("expected a product"));
        let err = parse_triples("p1\thas_brand\n", &p(), &mut log.registry, HeadPolicy::Register).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_heads_follow_policy() {
        let mut reg = Registry::new();
        let g = parse_triples("p9\tr\ta\n", &p(), &mut reg, HeadPolicy::Skip).unwrap();
        assert_eq!((g.triples.len(), g.skipped), (0, 1));
        let g = parse_triples("p9\tr\ta\n", &p(), &mut reg, HeadPolicy::Register).unwrap();
        assert_eq!(g.triples.len(), 1);
        assert_eq!(reg.kind(g.triples[0].head), EntityKind::Product);
    }

    #[test]
    fn registry_roundtrip() {
        let mut log = parse_events("u1 p1 click 1\nu1 q1 search 2\n", &p(), &ActionSchema::default()).unwrap();
        parse_triples("p1\thas_brand\tb1\n", &p(), &mut log.registry, HeadPolicy::Register).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_registry(&log.registry, dir.path()).unwrap();
        let back = import_registry(dir.path()).unwrap();
        assert_eq!(back, log.registry);
    }
}
