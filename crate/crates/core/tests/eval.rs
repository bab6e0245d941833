use proptest::prelude::*;
use rete::eval::*;
use rete::graph::EntityId;
use rete::model::{ModelConfig, ModelParams};
use rete::numcore::ParameterStore;
use rete::rng::rng_from;
use rete::sampler::{sample_dataset, EnsembleConfig};
use rete::synthetic::{generate, PlantedConfig};

fn brute(ranked: &[u32], truth: &[u32], k: usize) -> (f64, f64) {
    let top: Vec<u32> = ranked.iter().copied().take(k).collect();
    let hits = truth.iter().filter(|t| top.contains(t)).count();
    let dcg: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, e)| truth.contains(e))
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..truth.len().min(k)).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    (hits as f64 / truth.len() as f64, dcg / ideal)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metrics_match_brute_force(perm in Just((0u32..30).collect::<Vec<_>>()).prop_shuffle(), mask in prop::collection::vec(any::<bool>(), 30), k in 1usize..35) {
        let truth: Vec<u32> = (0..30).filter(|&i| mask[i as usize]).collect();
        prop_assume!(!truth.is_empty());
        let ids = |v: &[u32]| v.iter().map(|&x| EntityId(x)).collect::<Vec<_>>();
        let (r, n) = brute(&perm, &truth, k);
        prop_assert_eq!(recall_at_k(&ids(&perm), &ids(&truth), k).unwrap(), r);
        prop_assert!((ndcg_at_k(&ids(&perm), &ids(&truth), k).unwrap() - n).abs() <= 1e-12);
        prop_assert!(r <= 1.0 && n <= 1.0 + 1e-12);
    }
}

#[test]
fn frozen_and_autoregressive_reports() {
    let mut syn = generate(&PlantedConfig::drift(4)).unwrap();
    // the last user only appears from the test window on under a new name
    syn.events = syn
        .events
        .lines()
        .map(|l| {
            let ts: i64 = l.rsplit('\t').next().unwrap().parse().unwrap_or(-1);
            if ts >= 22_000 && l.starts_with("u19\t") {
                l.replacen("u19", "u99", 1)
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let data = syn.dataset().unwrap();
    let split = data.segmentation.split;
    let cache = sample_dataset(&data, split.background..data.num_steps(), &EnsembleConfig::default(), 4).unwrap();
    let truth = GroundTruth::from_dataset(&data);
    let cfg = ModelConfig { dim: 8, layers: 2, ..ModelConfig::default() };
    let mut store = ParameterStore::new();
    let params = ModelParams::init(&mut store, &cfg, data.num_entities(), data.registry.num_relations(), &mut rng_from(4)).unwrap();
    let pred = Predictor { data: &data, cache: &cache, store: &store, params: &params, cfg: &cfg };
    let ks = [5, 10];
    let frozen = evaluate(&pred, &truth, split.test_range(), &ks, EvalMode::Frozen).unwrap();
    let ar = evaluate(&pred, &truth, split.test_range(), &ks, EvalMode::Autoregressive).unwrap();
    assert_eq!(frozen.skipped_users, 1);
    assert_eq!(ar.skipped_users, 1);
    assert_ne!(frozen.to_json(), ar.to_json());

    // first step shares the context, later ones need not
    let first = split.test_range().start;
    let at = |r: &MetricsReport| -> Vec<(Task, usize, f64)> {
        r.records.iter().filter(|x| x.step == first).map(|x| (x.task, x.k, x.recall)).collect()
    };
    assert_eq!(at(&frozen), at(&ar));

    for rep in [&frozen, &ar] {
        assert_eq!(rep.steps, split.test_range().collect::<Vec<_>>());
        for task in Task::ALL {
            for &k in &ks {
                let rows: Vec<&UserScore> = rep.per_user.iter().filter(|u| u.task == task && u.k == k).collect();
                let mean = rows.iter().map(|u| u.recall).sum::<f64>() / rows.len() as f64;
                let agg = rep.aggregate(task, k).unwrap();
                assert!((agg.recall - mean).abs() < 1e-12);
                assert_eq!(agg.n_pairs, rows.len());
                assert_eq!(rows.len(), 19 * split.test);
            }
        }
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(json["skipped_users"], 1);
        assert!(json["aggregates"].as_array().unwrap().len() == 4);
        let mut csv = Vec::new();
        rep.write_user_csv(&mut csv, &data.registry).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), rep.per_user.len() + 1);
        assert!(!text.contains("u99"));
    }
    assert!(evaluate(&pred, &truth, split.test_range(), &[0], EvalMode::Frozen).is_err());
    assert!(evaluate(&pred, &truth, 0..3, &[5], EvalMode::Frozen).is_err());
    assert_eq!("autoregressive".parse::<EvalMode>().unwrap(), EvalMode::Autoregressive);
    assert!("sideways".parse::<EvalMode>().is_err());
}
