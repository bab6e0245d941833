//! Quick oracle suites run by the `selftest` command.

use std::sync::Arc;

use rand::Rng as _;

use crate::error::Result;
use crate::eval::{ndcg_at_k, recall_at_k};
use crate::graph::{AdjacencyIndex, EntityId, RelationId};
use crate::model::{attention_mask, gat_layer_weights, infinite_depth_signature, temporal_output, temporal_weights, ModelConfig, ModelParams};
use crate::numcore::{suite::primitive_suite, ParameterStore, Tape, Tensor};
use crate::rng::{derive_seed, mix, rng_from, Rng};
use crate::sampler::{approx_ppr, PprConfig, SamplerTag, Subgraph};
use crate::training::warp_loss;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn random_connected(rng: &mut Rng, n: usize, p: f64) -> AdjacencyIndex {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) && !edges.contains(&(a, b)) {
                edges.push((a, b));
            }
        }
    }
    AdjacencyIndex::from_edges(
        n,
        edges.into_iter().map(|(a, b)| (EntityId(a as u32), EntityId(b as u32), RelationId(0))),
    )
}

fn dense_ppr(adj: &AdjacencyIndex, s: usize, alpha: f64) -> Vec<f64> {
    let n = adj.num_nodes();
    let mut x = vec![0.0; n];
    x[s] = 1.0;
    loop {
        let mut y = vec![0.0; n];
        y[s] = alpha;
        for u in 0..n {
            let nb = adj.neighbors(EntityId(u as u32));
            for v in nb {
                y[v.index()] += (1.0 - alpha) * x[u] / nb.len() as f64;
            }
        }
        let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if diff < 1e-10 {
            return x;
        }
    }
}

fn check_ppr(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from(seed);
    let cfg = PprConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let n = rng.gen_range(2..=30);
        let adj = random_connected(&mut rng, n, 0.1);
        let s = rng.gen_range(0..n);
        let eps = cfg.eps_for(&adj);
        let mut p = vec![0.0; n];
        for (v, x) in approx_ppr(&adj, EntityId(s as u32), &cfg)? {
            p[v.index()] = x;
        }
        let pi = dense_ppr(&adj, s, cfg.alpha);
        for v in 0..n {
            let slack = (p[v] - pi[v]).abs() - eps * adj.degree(EntityId(v as u32)) as f64;
            worst = worst.max(slack);
        }
    }
    Ok(outcome("ppr", worst <= 0.0, format!("max excess over eps*deg {worst:.3e}")))
}

fn check_gradients(seed: u64) -> Result<CheckOutcome> {
    let results = primitive_suite(seed, 1)?;
    let (name, err) = results
        .iter()
        .copied()
        .fold(("", 0.0), |acc, (n, e)| if e > acc.1 { (n, e) } else { acc });
    Ok(outcome(
        "gradients",
        err < 1e-5,
        format!("{} primitives, worst {name} at {err:.3e}", results.len()),
    ))
}

fn check_metrics(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from(seed);
    let mut bad = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..20u32);
        let mut ranked: Vec<EntityId> = (0..n).map(EntityId).collect();
        for i in (1..ranked.len()).rev() {
            ranked.swap(i, rng.gen_range(0..=i));
        }
        let truth: Vec<EntityId> = (0..n).filter(|_| rng.gen_bool(0.3)).map(EntityId).collect();
        if truth.is_empty() {
            continue;
        }
        let k = rng.gen_range(1..=n as usize + 2);
        let mut hits = 0.0;
        let mut dcg = 0.0;
        for (i, e) in ranked.iter().enumerate().take(k) {
            if truth.contains(e) {
                hits += 1.0;
                dcg += 1.0 / (i as f64 + 2.0).log2();
            }
        }
        let idcg: f64 = (0..truth.len().min(k)).map(|i| 1.0 / (i as f64 + 2.0).log2()).sum();
        let r = recall_at_k(&ranked, &truth, k)?;
        let g = ndcg_at_k(&ranked, &truth, k)?;
        if r != hits / truth.len() as f64 || (g - dcg / idcg).abs() > 1e-12 {
            bad += 1;
        }
    }
    Ok(outcome("metrics", bad == 0, format!("{bad} mismatches")))
}

fn check_warp(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from(seed);
    let mut bad = 0;
    for _ in 0..200 {
        let margin = rng.gen_range(0.1..2.0);
        let pos = rng.gen_range(-2.0..2.0);
        let negs: Vec<f64> = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let violated = negs.iter().filter(|&&n| n + margin > pos).count();
        let rank = violated.max(1);
        let weight: f64 = (1..=rank).map(|i| 1.0 / i as f64).sum();
        let direct = weight / rank as f64 * negs.iter().map(|n| (margin - pos + n).max(0.0)).sum::<f64>();
        let l = warp_loss(pos, &negs, margin);
        let satisfied = negs.iter().all(|&n| pos >= n + margin);
        if (l - direct).abs() > 1e-12 || (l == 0.0) != satisfied {
            bad += 1;
        }
    }
    Ok(outcome("warp", bad == 0, format!("{bad} mismatches")))
}

fn check_attention(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from(seed);
    let mut worst_sum: f64 = 0.0;
    let mut causal = true;
    for _ in 0..20 {
        let t = rng.gen_range(1..=8);
        let d = rng.gen_range(1..=16);
        let h = Tensor::uniform(t, d, 1.0, &mut rng);
        let wq = Tensor::uniform(d, d, 1.0, &mut rng);
        let wk = Tensor::uniform(d, d, 1.0, &mut rng);
        let wv = Tensor::uniform(d, d, 1.0, &mut rng);
        let beta = temporal_weights(&h, &wq, &wk)?;
        for j in 0..t {
            let s: f64 = (0..t).map(|i| beta[(i, j)]).sum();
            worst_sum = worst_sum.max((s - 1.0).abs());
            let before = temporal_output(&h, &wq, &wk, &wv, j)?;
            let mut edited = h.clone();
            for i in j + 1..t {
                edited.row_mut(i).iter_mut().for_each(|x| *x = rng.gen_range(-5.0..5.0));
            }
            causal &= temporal_output(&edited, &wq, &wk, &wv, j)? == before;
        }

        let n = rng.gen_range(2..=8);
        let adj = random_connected(&mut rng, n, 0.3);
        let all: Vec<EntityId> = (1..n as u32).map(EntityId).collect();
        let sub = Subgraph::induced(&adj, EntityId(0), &all, SamplerTag::Khop);
        let cfg = ModelConfig {
            dim: d,
            layers: 1,
            ..ModelConfig::default()
        };
        let mut store = ParameterStore::new();
        let params = ModelParams::init(&mut store, &cfg, n, 1, &mut rng)?;
        let mut tape = Tape::new();
        let x = tape.param_rows(&store, params.emb, &(0..n).collect::<Vec<_>>())?;
        let mask: Arc<Vec<bool>> = attention_mask(&sub, true)?;
        let (_, alpha) = gat_layer_weights(&mut tape, &store, x, &params.gat[0], &mask, &cfg)?;
        let a = tape.value(alpha);
        for r in 0..n {
            worst_sum = worst_sum.max((a.row(r).iter().sum::<f64>() - 1.0).abs());
        }
    }
    Ok(outcome(
        "attention",
        worst_sum <= 1e-12 && causal,
        format!("max |sum - 1| {worst_sum:.3e}, causal {causal}"),
    ))
}

fn check_signature(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from(seed);
    let mut ok = true;
    for _ in 0..10 {
        let n = rng.gen_range(3..=10);
        let adj = random_connected(&mut rng, n, 0.2);
        let all: Vec<EntityId> = (1..n as u32).map(EntityId).collect();
        let sub = Subgraph::induced(&adj, EntityId(0), &all, SamplerTag::Ppr);
        let x = Tensor::uniform(n, 4, 1.0, &mut rng);
        let a = infinite_depth_signature(&sub, &x)?;
        let b = infinite_depth_signature(&sub.clone(), &x)?;
        ok &= a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-10);
    }
    Ok(outcome("signature", ok, "identical subgraphs agree".into()))
}

/// Runs every suite; each draws from its own stream under `seed`.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let s = |tag: &str| mix(derive_seed(seed, "selftest"), &[derive_seed(0, tag)]);
    Ok(vec![
        check_ppr(s("ppr"))?,
        check_gradients(s("gradients"))?,
        check_metrics(s("metrics"))?,
        check_warp(s("warp"))?,
        check_attention(s("attention"))?,
        check_signature(s("signature"))?,
    ])
}
