//! Precomputed subgraphs for every (user, step), stored as a binary file.
//!
//! ```text
//! magic   b"RETESUBG"
//! version u32 (= 1)
//! count   u32                      number of (user, step) records
//! count × { user u32, step u32, s u32,
//!           s × { tag u8, n u32, n × entity u32, m u32, m × (a u32, b u32) } }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Dataset, EntityId};
use crate::rng::mix;
use crate::sampler::ensemble::{ensemble_sample_or_singleton, EnsembleConfig};
use crate::sampler::subgraph::{SamplerTag, Subgraph};

const MAGIC: &[u8; 8] = b"RETESUBG";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubgraphCache {
    records: BTreeMap<(EntityId, usize), Vec<Subgraph>>,
}

impl SubgraphCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: EntityId, step: usize, subs: Vec<Subgraph>) {
        self.records.insert((user, step), subs);
    }

    pub fn get(&self, user: EntityId, step: usize) -> Option<&[Subgraph]> {
        self.records.get(&(user, step)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, usize, &[Subgraph])> {
        self.records.iter().map(|(&(u, t), s)| (u, t, s.as_slice()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for (&(u, t), subs) in &self.records {
            out.extend_from_slice(&u.0.to_le_bytes());
            out.extend_from_slice(&(t as u32).to_le_bytes());
            out.extend_from_slice(&(subs.len() as u32).to_le_bytes());
            for s in subs {
                out.extend_from_slice(&s.to_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(corrupt("bad magic".into()));
        }
        let v = r.u32()?;
        if v != VERSION {
            return Err(corrupt(format!("unsupported version {v}")));
        }
        let mut cache = SubgraphCache::new();
        for _ in 0..r.u32()? {
            let user = EntityId(r.u32()?);
            let step = r.u32()? as usize;
            let s = r.u32()?;
            let mut subs = Vec::with_capacity(s as usize);
            for _ in 0..s {
                let tag = SamplerTag::from_code(r.take(1)?[0]).ok_or_else(|| corrupt("unknown sampler tag".into()))?;
                let n = r.u32()?;
                let entities = (0..n).map(|_| r.u32().map(EntityId)).collect::<Result<Vec<_>>>()?;
                let m = r.u32()?;
                let edges = (0..m)
                    .map(|_| Ok((r.u32()?, r.u32()?)))
                    .collect::<Result<Vec<_>>>()?;
                let sg = Subgraph::from_raw(entities, edges, tag)
                    .ok_or_else(|| corrupt(format!("non-canonical subgraph for user {} step {step}", user.0)))?;
                if sg.center() != user {
                    return Err(corrupt(format!("subgraph center mismatch for user {}", user.0)));
                }
                subs.push(sg);
            }
            cache.insert(user, step, subs);
        }
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes".into()));
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(corrupt(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn corrupt(message: String) -> Error {
    Error::Format {
        what: "subgraph cache",
        message,
    }
}

/// Samples every user of `data` at every step in `steps`. Step `t` reseeds
/// the k-hop samplers with `mix(seed, [t])`.
pub fn sample_dataset(
    data: &Dataset,
    steps: impl IntoIterator<Item = usize>,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<SubgraphCache> {
    cfg.validate()?;
    let mut cache = SubgraphCache::new();
    for t in steps {
        if t >= data.num_steps() {
            return Err(Error::Config(format!("step {t} out of range (T = {})", data.num_steps())));
        }
        let adj = data.adjacency(t);
        let step_cfg = cfg.reseeded(mix(seed, &[t as u64]));
        for &u in &data.entities().users {
            cache.insert(u, t, ensemble_sample_or_singleton(&adj, u, &step_cfg)?);
        }
    }
    Ok(cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AdjacencyIndex, RelationId};

    #[test]
    fn roundtrip() {
        let adj = AdjacencyIndex::from_edges(
            5,
            [(0, 1), (1, 2), (0, 3), (3, 4)].iter().map(|&(a, b)| (EntityId(a), EntityId(b), RelationId(0))),
        );
        let mut c = SubgraphCache::new();
        c.insert(
            EntityId(0),
            3,
            crate::sampler::ensemble_sample(&adj, EntityId(0), &EnsembleConfig::default()).unwrap(),
        );
        c.insert(EntityId(2), 0, vec![Subgraph::singleton(EntityId(2), SamplerTag::Singleton)]);
        let bytes = c.encode();
        assert_eq!(SubgraphCache::decode(&bytes).unwrap(), c);
        assert!(SubgraphCache::decode(&bytes[..bytes.len() - 2]).is_err());
    }
}
