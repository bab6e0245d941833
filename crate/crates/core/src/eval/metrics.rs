use crate::error::{Error, Result};
use crate::graph::EntityId;

fn check(truth: &[EntityId]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Empty("ground-truth set"));
    }
    Ok(())
}

/// `|top-K ∩ truth| / |truth|`.
pub fn recall_at_k(ranked: &[EntityId], truth: &[EntityId], k: usize) -> Result<f64> {
    check(truth)?;
    let hits = ranked.iter().take(k).filter(|e| truth.contains(e)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Binary-relevance NDCG with log₂ discounts.
pub fn ndcg_at_k(ranked: &[EntityId], truth: &[EntityId], k: usize) -> Result<f64> {
    check(truth)?;
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, e)| truth.contains(e))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..truth.len().min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    Ok(if ideal > 0.0 { dcg / ideal } else { 0.0 })
}

/// Candidates sorted by descending score, ties by ascending id.
pub fn rank_by_score(candidates: &[EntityId], scores: &[f64]) -> Vec<EntityId> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(candidates[a].cmp(&candidates[b])));
    idx.into_iter().map(|i| candidates[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().map(|&x| EntityId(x)).collect()
    }

    #[test]
    fn documented_cases() {
        let r = ids(&[0, 1, 2, 3]);
        assert_eq!(recall_at_k(&r, &ids(&[1, 3]), 2).unwrap(), 0.5);
        assert_eq!(recall_at_k(&r, &ids(&[0, 1]), 2).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &ids(&[3]), 2).unwrap(), 0.0);
        let n = ndcg_at_k(&ids(&[9, 1, 8, 2]), &ids(&[1, 2]), 4).unwrap();
        assert!((n - 0.6510).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&r, &ids(&[0]), 3).unwrap(), 1.0);
        assert!(recall_at_k(&r, &[], 2).is_err());
    }

    #[test]
    fn ties_rank_by_id() {
        let c = ids(&[5, 2, 9]);
        assert_eq!(rank_by_score(&c, &[1.0, 1.0, 2.0]), ids(&[9, 2, 5]));
    }
}
