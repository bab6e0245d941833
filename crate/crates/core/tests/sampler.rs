use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rete::graph::{AdjacencyIndex, EntityId, RelationId};
use rete::sampler::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn graph(n: usize, edges: &[(usize, usize)]) -> AdjacencyIndex {
    AdjacencyIndex::from_edges(
        n,
        edges.iter().map(|&(a, b)| (EntityId(a as u32), EntityId(b as u32), RelationId(0))),
    )
}

fn random_connected(seed: u64, n: usize, p: f64) -> AdjacencyIndex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        edges.insert((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.insert((a, b));
            }
        }
    }
    graph(n, &edges.into_iter().collect::<Vec<_>>())
}

fn exact_ppr(adj: &AdjacencyIndex, s: usize, alpha: f64) -> Vec<f64> {
    let n = adj.num_nodes();
    let mut x = vec![0.0; n];
    x[s] = 1.0;
    for _ in 0..100_000 {
        let mut y = vec![0.0; n];
        y[s] = alpha;
        for u in 0..n {
            let nb = adj.neighbors(EntityId(u as u32));
            for v in nb {
                y[v.index()] += (1.0 - alpha) * x[u] / nb.len() as f64;
            }
        }
        let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>();
        x = y;
        if diff < 1e-13 {
            break;
        }
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ppr_within_push_bound(seed in any::<u64>(), n in 2usize..=50, p in 0.0f64..0.3, eps_exp in 2i32..8) {
        let adj = random_connected(seed, n, p);
        let cfg = PprConfig { eps: Some(10f64.powi(-eps_exp)), ..Default::default() };
        let s = (seed % n as u64) as usize;
        let est = approx_ppr(&adj, EntityId(s as u32), &cfg).unwrap();
        let pi = exact_ppr(&adj, s, cfg.alpha);
        let mut mass = 0.0;
        for &(v, x) in &est {
            prop_assert!(x >= 0.0);
            mass += x;
            prop_assert!((x - pi[v.index()]).abs() <= cfg.eps_for(&adj) * adj.degree(v) as f64 + 1e-12);
        }
        prop_assert!(mass <= 1.0 + 1e-12);
        let listed: BTreeSet<usize> = est.iter().map(|(v, _)| v.index()).collect();
        for v in (0..n).filter(|v| !listed.contains(v)) {
            prop_assert!(pi[v] <= cfg.eps_for(&adj) * adj.degree(EntityId(v as u32)) as f64 + 1e-12);
        }
    }

    #[test]
    fn subgraphs_are_induced_connected_and_within_budget(seed in any::<u64>(), n in 2usize..40, b in 1usize..8) {
        let adj = random_connected(seed, n, 0.1);
        let user = EntityId((seed % n as u64) as u32);
        let ppr = ppr_subgraph(&adj, user, &PprConfig { budget: b, ..Default::default() }).unwrap();
        let khop = khop_subgraph(&adj, user, &KhopConfig { budget: b, seed, ..Default::default() }).unwrap();
        prop_assert!(ppr.len() <= b + 1);
        for sg in [&ppr, &khop] {
            prop_assert_eq!(sg.center(), user);
            prop_assert!(sg.reachable_from_center().iter().all(|&r| r));
            let ents = sg.entities();
            let edges: BTreeSet<(EntityId, EntityId)> = sg.global_edges().map(|(a, c)| (a.min(c), a.max(c))).collect();
            for (i, &a) in ents.iter().enumerate() {
                for &c in &ents[i + 1..] {
                    let key = if a < c { (a, c) } else { (c, a) };
                    prop_assert_eq!(adj.has_edge(a, c), edges.contains(&key));
                }
            }
        }
        let again = khop_subgraph(&adj, user, &KhopConfig { budget: b, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(khop.to_bytes(), again.to_bytes());
    }
}

#[test]
fn khop_leaf_choice_is_uniform() {
    let adj = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
    let mut counts: BTreeMap<Vec<EntityId>, usize> = BTreeMap::new();
    let draws = 10_000;
    for seed in 0..draws {
        let sg = khop_subgraph(&adj, EntityId(0), &KhopConfig { k: 1, budget: 2, seed }).unwrap();
        assert_eq!(sg.len(), 3);
        *counts.entry(sg.entities()[1..].to_vec()).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 10);
    let expected = draws as f64 / 10.0;
    let stat: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

#[test]
fn ppr_top_four_matches_exact_ranking() {
    let adj = random_connected(7, 10, 0.2);
    let cfg = PprConfig {
        budget: 4,
        eps: Some(1e-13),
        keep_disconnected: true,
        ..Default::default()
    };
    let sg = ppr_subgraph(&adj, EntityId(0), &cfg).unwrap();
    let pi = exact_ppr(&adj, 0, cfg.alpha);
    let mut order: Vec<usize> = (1..10).collect();
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
    let want: BTreeSet<EntityId> = order[..4].iter().map(|&v| EntityId(v as u32)).collect();
    let got: BTreeSet<EntityId> = sg.entities()[1..].iter().copied().collect();
    assert_eq!(got, want);
}

#[test]
fn ensemble_covers_ppr_selection() {
    let adj = random_connected(11, 10, 0.2);
    let ens = ensemble_sample(&adj, EntityId(3), &EnsembleConfig::default()).unwrap();
    assert_eq!(ens.len(), 2);
    assert_eq!(ens[0].source, SamplerTag::Ppr);
    assert_eq!(ens[1].source, SamplerTag::Khop);
    let union: BTreeSet<EntityId> = ens.iter().flat_map(|s| s.entities().iter().copied()).collect();
    let ppr = ensemble_sample(&adj, EntityId(3), &EnsembleConfig::ppr_only()).unwrap();
    assert_eq!(ppr.len(), 1);
    assert!(ppr[0].entities().iter().all(|e| union.contains(e)));
}

#[test]
fn theta_above_every_score_leaves_the_user_alone() {
    let adj = random_connected(3, 8, 0.2);
    let sg = ppr_subgraph(&adj, EntityId(0), &PprConfig { theta: 1.0, ..Default::default() }).unwrap();
    assert_eq!(sg.entities(), &[EntityId(0)]);
    assert!(sg.edges().is_empty());
}

#[test]
fn cache_file_round_trip() {
    let syn = rete::synthetic::generate(&rete::synthetic::PlantedConfig::planted(5)).unwrap();
    let data = syn.dataset().unwrap();
    let a = sample_dataset(&data, 10..12, &EnsembleConfig::default(), 9).unwrap();
    let b = sample_dataset(&data, 10..12, &EnsembleConfig::default(), 9).unwrap();
    assert_eq!(a.encode(), b.encode());
    assert_eq!(a.len(), 2 * data.entities().users.len());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("subgraphs.bin");
    a.save(&path).unwrap();
    assert_eq!(SubgraphCache::load(&path).unwrap(), a);
    let bytes = std::fs::read(&path).unwrap();
    assert!(SubgraphCache::decode(&bytes[1..]).is_err());
}
