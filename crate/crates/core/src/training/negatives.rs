use rand::Rng as _;

use crate::graph::EntityId;
use crate::rng::Rng;

/// Uniform draws from a candidate pool, skipping excluded entities.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    pool: Vec<EntityId>,
}

impl NegativeSampler {
    pub fn new(pool: Vec<EntityId>) -> Self {
        NegativeSampler { pool }
    }

    pub fn pool(&self) -> &[EntityId] {
        &self.pool
    }

    /// `n` draws with replacement from the pool minus `exclude`. Returns
    /// fewer (possibly none) only when every candidate is excluded.
    pub fn draw(&self, rng: &mut Rng, n: usize, exclude: &[EntityId]) -> Vec<EntityId> {
        let allowed = |e: &EntityId| !exclude.contains(e);
        if self.pool.is_empty() || n == 0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(n);
        let mut misses = 0;
        while out.len() < n && misses < 64 {
            let e = self.pool[rng.gen_range(0..self.pool.len())];
            if allowed(&e) {
                out.push(e);
                misses = 0;
            } else {
                misses += 1;
            }
        }
        if out.len() < n {
            let rest: Vec<EntityId> = self.pool.iter().copied().filter(allowed).collect();
            if rest.is_empty() {
                return Vec::new();
            }
            while out.len() < n {
                out.push(rest[rng.gen_range(0..rest.len())]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn never_returns_excluded() {
        let s = NegativeSampler::new((0..5).map(EntityId).collect());
        let mut rng = rng_from(1);
        let ex = [EntityId(0), EntityId(1), EntityId(2), EntityId(3)];
        let got = s.draw(&mut rng, 50, &ex);
        assert_eq!(got, vec![EntityId(4); 50]);
        let all: Vec<EntityId> = (0..5).map(EntityId).collect();
        assert!(s.draw(&mut rng, 3, &all).is_empty());
    }
}
