//! Planted-preference event logs with a known cluster structure.
//!
//! Users belong to one of several clusters. Each cluster owns a block of
//! products and queries, a brand and a category; a few "core" items per
//! cluster carry all interactions after the background steps. The drift
//! variant lets users switch cluster during training and flips every user
//! at a fixed step of the test window.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::ingest::{parse_events, parse_triples};
use crate::graph::{segment_time, ActionSchema, Dataset, HeadPolicy, Split};
use crate::rng::{derive_seed, mix, rng_from};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub users: usize,
    pub products: usize,
    pub queries: usize,
    pub clusters: usize,
    pub core_products: usize,
    pub core_queries: usize,
    pub products_per_step: usize,
    pub queries_per_step: usize,
    pub split: Split,
    /// Chance that a user moves to another cluster at each training step.
    pub switch_prob: f64,
    /// Global step from which every user is moved to the next cluster.
    pub flip_at: Option<usize>,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            users: 20,
            products: 30,
            queries: 10,
            clusters: 2,
            core_products: 4,
            core_queries: 3,
            products_per_step: 3,
            queries_per_step: 1,
            split: Split::default(),
            switch_prob: 0.0,
            flip_at: None,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    pub fn planted(seed: u64) -> Self {
        PlantedConfig {
            seed,
            ..Self::default()
        }
    }

    /// Preferences wander during training and all flip at the third test step.
    pub fn drift(seed: u64) -> Self {
        let split = Split::default();
        PlantedConfig {
            switch_prob: 0.2,
            flip_at: Some(split.test_range().start + 2),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.clusters;
        if c == 0 || self.users < c || self.products % c != 0 || self.queries % c != 0 {
            return Err(Error::Config(format!(
                "{} users, {} products and {} queries cannot be split into {c} clusters",
                self.users, self.products, self.queries
            )));
        }
        let (pc, qc) = (self.products / c, self.queries / c);
        if self.core_products > pc || self.core_queries > qc || self.core_products == 0 || self.core_queries == 0 {
            return Err(Error::Config("core items must be a non-empty part of each cluster".into()));
        }
        if self.products_per_step > self.core_products || self.queries_per_step > self.core_queries {
            return Err(Error::Config("per-step interactions exceed the core items".into()));
        }
        if !(0.0..=1.0).contains(&self.switch_prob) {
            return Err(Error::Config(format!("switch probability {} outside [0, 1]", self.switch_prob)));
        }
        Ok(())
    }
}

/// The generated files plus the cluster of every user at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub events: String,
    pub triples: String,
    /// `assignment[t][u]` is the cluster of user `u` at step `t`.
    pub assignment: Vec<Vec<usize>>,
    pub split: Split,
}

pub fn user_name(u: usize) -> String {
    format!("u{u:02}")
}

pub fn product_name(p: usize) -> String {
    format!("p{p:02}")
}

pub fn query_name(q: usize) -> String {
    format!("q{q:02}")
}

pub fn generate(cfg: &PlantedConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let steps = cfg.split.total();
    let c = cfg.clusters;
    let (pc, qc) = (cfg.products / c, cfg.queries / c);
    let home = |u: usize| u * c / cfg.users;

    let mut walk = rng_from(derive_seed(cfg.seed, "synthetic.assignment"));
    let mut current: Vec<usize> = (0..cfg.users).map(home).collect();
    let mut assignment = Vec::with_capacity(steps);
    let train = cfg.split.train_range();
    for t in 0..steps {
        if train.contains(&t) && t > train.start && c > 1 {
            for cl in current.iter_mut() {
                if walk.gen_bool(cfg.switch_prob) {
                    *cl = (*cl + walk.gen_range(1..c)) % c;
                }
            }
        }
        if cfg.flip_at == Some(t) {
            for cl in current.iter_mut() {
                *cl = (*cl + 1) % c;
            }
        }
        assignment.push(current.clone());
    }

    let mut events = String::from("user_id\ttarget_id\taction\ttimestamp\n");
    for (t, clusters) in assignment.iter().enumerate() {
        let background = t < cfg.split.background;
        let mut ts = t as i64 * 1000;
        for (u, &cl) in clusters.iter().enumerate() {
            let mut rng = rng_from(mix(cfg.seed, &[t as u64, u as u64]));
            let (np, nq) = if background { (pc, qc) } else { (cfg.core_products, cfg.core_queries) };
            let prods: Vec<usize> = (0..np).collect();
            let queries: Vec<usize> = (0..nq).collect();
            for &p in prods.choose_multiple(&mut rng, cfg.products_per_step) {
                writeln!(events, "{}\t{}\tclick\t{ts}", user_name(u), product_name(cl * pc + p)).unwrap();
                ts += 1;
            }
            for &q in queries.choose_multiple(&mut rng, cfg.queries_per_step) {
                writeln!(events, "{}\t{}\tsearch\t{ts}", user_name(u), query_name(cl * qc + q)).unwrap();
                ts += 1;
            }
        }
    }

    let mut triples = String::new();
    for p in 0..cfg.products {
        let cl = p / pc;
        writeln!(triples, "{}\tbrand\tbrand{cl}", product_name(p)).unwrap();
        writeln!(triples, "{}\tcategory\tcat{cl}", product_name(p)).unwrap();
        let q = cl * qc + (p % pc) % qc;
        writeln!(triples, "{}\tmatches\t{}", product_name(p), query_name(q)).unwrap();
    }
    Ok(Synthetic {
        events,
        triples,
        assignment,
        split: cfg.split,
    })
}

impl Synthetic {
    /// Parses the generated files through the regular ingestion path.
    pub fn dataset(&self) -> Result<Dataset> {
        let path = Path::new("<synthetic>");
        let mut log = parse_events(&self.events, path, &ActionSchema::default())?;
        let graph = parse_triples(&self.triples, path, &mut log.registry, HeadPolicy::Register)?;
        let seg = segment_time(&log, self.split.total(), self.split)?;
        Ok(Dataset::new(&log, seg, graph.triples))
    }

    /// Writes `events.tsv` and `triples.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [("events.tsv", &self.events), ("triples.tsv", &self.triples)] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
