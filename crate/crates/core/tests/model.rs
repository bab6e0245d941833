use std::sync::Arc;

use rete::graph::{EntityId, RelationId};
use rete::model::*;
use rete::numcore::{ParameterStore, Tape, Tensor};
use rete::rng::rng_from;
use rete::sampler::{SamplerTag, Subgraph};

type M = Vec<Vec<f64>>;

fn to_m(t: &Tensor) -> M {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

fn mm(a: &M, b: &M) -> M {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i][p] * b[p][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.2 * x
    }
}

/// Straight-line attention layer: for every node, softmax over neighbors of
/// leaky(a1·q_u + a2·k_v), then tanh of the weighted sum of values.
fn gat_oracle(h: &M, wq: &M, wk: &M, wv: &M, a: &[f64], nb: &[Vec<usize>]) -> (M, M) {
    let d = wq.len();
    let q = mm(h, wq);
    let k = mm(h, wk);
    let v = mm(h, wv);
    let n = h.len();
    let mut out = vec![vec![0.0; d]; n];
    let mut alpha = vec![vec![0.0; n]; n];
    for u in 0..n {
        let scores: Vec<f64> = nb[u]
            .iter()
            .map(|&w| {
                let mut s = 0.0;
                for i in 0..d {
                    s += a[i] * q[u][i] + a[d + i] * k[w][i];
                }
                leaky(s)
            })
            .collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
        for (idx, &w) in nb[u].iter().enumerate() {
            alpha[u][w] = (scores[idx] - m).exp() / z;
        }
        for i in 0..d {
            let mut acc = 0.0;
            for &w in &nb[u] {
                acc += alpha[u][w] * v[w][i];
            }
            out[u][i] = acc.tanh();
        }
    }
    (out, alpha)
}

fn setup(d: usize, layers: usize, samplers: usize, entities: usize, seed: u64) -> (ParameterStore, ModelParams, ModelConfig) {
    let cfg = ModelConfig {
        dim: d,
        layers,
        samplers,
        ..Default::default()
    };
    let mut store = ParameterStore::new();
    let mut rng = rng_from(seed);
    let p = ModelParams::init(&mut store, &cfg, entities, 2, &mut rng).unwrap();
    (store, p, cfg)
}

fn sub(center: u32, others: &[u32], edges: &[(u32, u32)]) -> Subgraph {
    let o: Vec<EntityId> = others.iter().map(|&e| EntityId(e)).collect();
    let e: Vec<(EntityId, EntityId)> = edges.iter().map(|&(a, b)| (EntityId(a), EntityId(b))).collect();
    Subgraph::from_parts(EntityId(center), &o, &e, SamplerTag::Ppr)
}

fn run_layer(store: &ParameterStore, p: &ModelParams, cfg: &ModelConfig, s: &Subgraph) -> (Tensor, Tensor) {
    let mut tape = Tape::new();
    let rows: Vec<usize> = s.entities().iter().map(|e| e.index()).collect();
    let h = tape.param_rows(store, p.emb, &rows).unwrap();
    let mask = attention_mask(s, true).unwrap();
    let (o, a) = gat_layer_weights(&mut tape, store, h, &p.gat[0], &mask, cfg).unwrap();
    (tape.value(o).clone(), tape.value(a).clone())
}

#[test]
fn gat_single_neighbor_takes_full_weight() {
    let (store, p, cfg) = setup(4, 1, 1, 2, 1);
    let s = sub(0, &[1], &[(0, 1)]);
    let (out, alpha) = run_layer(&store, &p, &cfg, &s);
    assert_eq!(alpha.row(0), &[0.0, 1.0]);
    let hv = Tensor::row_vector(store.value(p.emb).row(1).to_vec());
    let expect = hv.matmul(store.value(p.gat[0].wv)).unwrap().map(f64::tanh);
    assert_eq!(out.row(0), expect.data());
}

#[test]
fn gat_identical_neighbors_split_evenly() {
    let (mut store, p, cfg) = setup(4, 1, 1, 3, 2);
    let leaf = store.value(p.emb).row(1).to_vec();
    store.value_mut(p.emb).row_mut(2).copy_from_slice(&leaf);
    let s = sub(0, &[1, 2], &[(0, 1), (0, 2)]);
    let (_, alpha) = run_layer(&store, &p, &cfg, &s);
    assert_eq!(alpha.row(0), &[0.0, 0.5, 0.5]);
}

#[test]
fn gat_matches_scalar_oracle() {
    let (store, p, cfg) = setup(5, 1, 1, 4, 3);
    let s = sub(0, &[1, 2, 3], &[(0, 1), (0, 2), (1, 2), (2, 3)]);
    let (out, alpha) = run_layer(&store, &p, &cfg, &s);
    let g = &p.gat[0];
    let (o2, a2) = gat_oracle(
        &to_m(store.value(p.emb)),
        &to_m(store.value(g.wq)),
        &to_m(store.value(g.wk)),
        &to_m(store.value(g.wv)),
        store.value(g.a).data(),
        &s.neighbor_lists(),
    );
    for u in 0..4 {
        let sum: f64 = alpha.row(u).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for i in 0..5 {
            assert!((out[(u, i)] - o2[u][i]).abs() < 1e-12);
        }
        for v in 0..4 {
            assert!((alpha[(u, v)] - a2[u][v]).abs() < 1e-12);
        }
    }
}

#[test]
fn isolated_center_needs_fallback() {
    let s = Subgraph::singleton(EntityId(0), SamplerTag::Singleton);
    assert!(attention_mask(&s, false).is_err());
    assert_eq!(*attention_mask(&s, true).unwrap(), vec![true]);
}

#[test]
fn pool_modes() {
    let mut tape = Tape::new();
    let h1 = tape.constant(Tensor::from_vec(3, 2, vec![1., 2., 3., 4., 5., 6.]).unwrap());
    let h2 = tape.constant(Tensor::from_vec(3, 2, vec![-1., 0., 2., 2., 0., 1.]).unwrap());
    let one = structural_pool(&mut tape, &[h1], PoolMode::Literal).unwrap();
    assert_eq!(tape.value(one).data(), &[1., 2.]);
    let lit = structural_pool(&mut tape, &[h1, h2], PoolMode::Literal).unwrap();
    assert_eq!(tape.value(lit).data(), &[0.0, 1.0]);
    let ent = structural_pool(&mut tape, &[h1, h2], PoolMode::EntityMean).unwrap();
    let sum0 = 1. + 3. + 5. - 1. + 2. + 0.;
    let sum1 = 2. + 4. + 6. + 0. + 2. + 1.;
    let got = tape.value(ent).data();
    assert!((got[0] - sum0 / 6.0).abs() < 1e-15 && (got[1] - sum1 / 6.0).abs() < 1e-15);

    let c = tape.constant(Tensor::from_vec(2, 2, vec![0.3, -0.7, 0.3, -0.7]).unwrap());
    for mode in [PoolMode::Literal, PoolMode::EntityMean] {
        let r = structural_pool(&mut tape, &[c, c, c], mode).unwrap();
        let got = tape.value(r).data();
        assert!((got[0] - 0.3).abs() < 1e-15 && (got[1] + 0.7).abs() < 1e-15);
    }
}

#[test]
fn pooled_representation_ignores_local_relabeling() {
    let (store, p, cfg) = setup(4, 2, 1, 5, 11);
    let s = sub(0, &[1, 2, 3, 4], &[(0, 1), (0, 2), (1, 3), (2, 4), (3, 4)]);
    let perm = [0usize, 3, 1, 4, 2];
    let run = |order: &[usize]| {
        let n = order.len();
        let mut tape = Tape::new();
        let h0 = tape.param_rows(&store, p.emb, order).unwrap();
        let nb = s.neighbor_lists();
        let mut keep = vec![false; n * n];
        let pos: Vec<usize> = (0..n).map(|g| order.iter().position(|&x| x == g).unwrap()).collect();
        for u in 0..n {
            for &v in &nb[u] {
                keep[pos[u] * n + pos[v]] = true;
            }
        }
        let mask = Arc::new(keep);
        let mut h = h0;
        let mut outs = vec![];
        for l in &p.gat {
            h = gat_layer(&mut tape, &store, h, l, &mask, &cfg).unwrap();
            outs.push(h);
        }
        let r = structural_pool(&mut tape, &outs, PoolMode::Literal).unwrap();
        tape.value(r).clone()
    };
    let a = run(&[0, 1, 2, 3, 4]);
    let b = run(&perm);
    assert!(a.max_abs_diff(&b) < 1e-12);
}

#[test]
fn fusion_cases() {
    let (mut store, p, cfg) = setup(3, 1, 1, 2, 4);
    *store.value_mut(p.fuse) = Tensor::identity(3);
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::row_vector(vec![0.5, -1.0, 2.0]));
    let out = fuse_subgraphs(&mut tape, &store, &p, &cfg, &[x]).unwrap();
    assert_eq!(tape.value(out).data(), &[0.5f64.tanh(), (-1.0f64).tanh(), 2.0f64.tanh()]);
    let z = tape.constant(Tensor::zeros(1, 3));
    let out = fuse_subgraphs(&mut tape, &store, &p, &cfg, &[z]).unwrap();
    assert_eq!(tape.value(out).data(), &[0.0; 3]);
    assert!(fuse_subgraphs(&mut tape, &store, &p, &cfg, &[z, z]).is_err());

    let (store, p, cfg) = setup(3, 1, 2, 2, 5);
    let mut rng = rng_from(6);
    let h1 = Tensor::uniform(1, 3, 1.0, &mut rng);
    let h2 = Tensor::uniform(1, 3, 1.0, &mut rng);
    let mut tape = Tape::new();
    let (a, b) = (tape.constant(h1.clone()), tape.constant(h2.clone()));
    let out = fuse_subgraphs(&mut tape, &store, &p, &cfg, &[a, b]).unwrap();
    let cat: Vec<f64> = h1.data().iter().chain(h2.data()).copied().collect();
    let w = store.value(p.fuse);
    for j in 0..3 {
        let mut s = 0.0;
        for i in 0..6 {
            s += cat[i] * w[(i, j)];
        }
        assert!((tape.value(out).data()[j] - s.tanh()).abs() < 1e-12);
    }
}

#[test]
fn temporal_cases() {
    let (store, p, _) = setup(4, 1, 1, 2, 7);
    let tp = &p.temporal;
    let mut rng = rng_from(8);

    let h = Tensor::uniform(1, 4, 1.0, &mut rng);
    let mut tape = Tape::new();
    let hv = tape.constant(h.clone());
    let (out, beta) = temporal_attention(&mut tape, &store, tp, hv, 0).unwrap();
    assert_eq!(tape.value(beta).data(), &[1.0]);
    assert_eq!(tape.value(out), &h.matmul(store.value(tp.wv)).unwrap());

    let row = Tensor::uniform(1, 4, 1.0, &mut rng);
    let same = Tensor::from_vec(3, 4, row.data().repeat(3)).unwrap();
    let w = temporal_weights(&same, store.value(tp.wq), store.value(tp.wk)).unwrap();
    for j in 0..3 {
        for i in 0..=j {
            assert!((w[(i, j)] - 1.0 / (j + 1) as f64).abs() < 1e-15);
        }
    }

    let h = Tensor::uniform(3, 4, 1.0, &mut rng);
    let w = temporal_weights(&h, store.value(tp.wq), store.value(tp.wk)).unwrap();
    assert_eq!(w[(2, 1)], 0.0);
    // oracle for column 1
    let q = to_m(&h.matmul(store.value(tp.wq)).unwrap());
    let k = to_m(&h.matmul(store.value(tp.wk)).unwrap());
    let v = to_m(&h.matmul(store.value(tp.wv)).unwrap());
    let sc: Vec<f64> = (0..2)
        .map(|i| (0..4).map(|c| q[1][c] * k[i][c]).sum::<f64>() / 2.0)
        .collect();
    let z: f64 = sc.iter().map(|s| s.exp()).sum();
    let b: Vec<f64> = sc.iter().map(|s| s.exp() / z).collect();
    for i in 0..2 {
        assert!((w[(i, 1)] - b[i]).abs() < 1e-12);
    }
    let mut tape = Tape::new();
    let hv = tape.constant(h.clone());
    let (out, _) = temporal_attention(&mut tape, &store, tp, hv, 1).unwrap();
    for c in 0..4 {
        let e = b[0] * v[0][c] + b[1] * v[1][c];
        assert!((tape.value(out).data()[c] - e).abs() < 1e-12);
    }
    let vo = temporal_output(&h, store.value(tp.wq), store.value(tp.wk), store.value(tp.wv), 1).unwrap();
    assert!(vo.max_abs_diff(tape.value(out)) < 1e-14);
    assert!(temporal_attention(&mut tape, &store, tp, hv, 3).is_err());
}

#[test]
fn temporal_scaling_keeps_distribution() {
    let (store, p, _) = setup(4, 1, 1, 2, 9);
    let mut rng = rng_from(10);
    let h = Tensor::uniform(5, 4, 1.0, &mut rng);
    let h3 = h.map(|x| 3.0 * x);
    let w = temporal_weights(&h3, store.value(p.temporal.wq), store.value(p.temporal.wk)).unwrap();
    for j in 0..5 {
        let s: f64 = (0..5).map(|i| w[(i, j)]).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn transr_cases() {
    let (mut store, p, _) = setup(4, 1, 1, 3, 12);
    let (h, r, t) = (EntityId(0), RelationId(1), EntityId(1));
    // r = 0, h = t
    store.value_mut(p.transr_r).row_mut(1).fill(0.0);
    let row = store.value(p.emb).row(0).to_vec();
    store.value_mut(p.emb).row_mut(1).copy_from_slice(&row);
    assert_eq!(transr_score(&store, &p, h, r, t).unwrap(), 0.0);

    // perfect fit: choose r = (t - h) W_r
    let mut rng = rng_from(13);
    *store.value_mut(p.emb) = Tensor::uniform(3, 4, 1.0, &mut rng);
    let emb = store.value(p.emb).clone();
    let diff = Tensor::row_vector(emb.row(1).iter().zip(emb.row(0)).map(|(a, b)| a - b).collect());
    let fit = diff.matmul(store.value(p.transr_w[1])).unwrap();
    store.value_mut(p.transr_r).row_mut(1).copy_from_slice(fit.data());
    assert!(transr_score(&store, &p, h, r, t).unwrap() < 1e-28);

    // random: hand-expanded quadratic
    *store.value_mut(p.transr_r) = Tensor::uniform(2, 4, 1.0, &mut rng);
    let w = to_m(store.value(p.transr_w[1]));
    let rv = store.value(p.transr_r).row(1).to_vec();
    let mut f = 0.0;
    for j in 0..4 {
        let mut z = rv[j];
        for i in 0..4 {
            z += emb[(0, i)] * w[i][j] - emb[(1, i)] * w[i][j];
        }
        f += z * z;
    }
    let got = transr_score(&store, &p, h, r, t).unwrap();
    assert!((got - f).abs() < 1e-12);
    assert!(got >= 0.0);
    let mut tape = Tape::new();
    let v = transr_triple(&mut tape, &store, &p, h, r, t).unwrap();
    assert!((tape.value(v).item() - f).abs() < 1e-12);
    assert!(transr_score(&store, &p, h, RelationId(5), t).is_err());
}

#[test]
fn relevance_cases() {
    assert_eq!(relevance(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
    assert_eq!(relevance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 1.5 * 1.5 + 4.0);
    let a = [0.25, -1.0, 3.0];
    let b = [2.0, 0.5, -0.125];
    assert_eq!(relevance(&a, &b).unwrap(), a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>());
    assert!(relevance(&a, &b[..2]).is_err());
}

#[test]
fn signature_single_edge() {
    let s = sub(0, &[1], &[(0, 1)]);
    let x = Tensor::from_vec(2, 3, vec![1.0, 2.0, -1.0, 3.0, 0.0, 5.0]).unwrap();
    let m = infinite_depth_signature(&s, &x).unwrap();
    for (j, v) in m.iter().enumerate() {
        assert!((v - (x[(0, j)] + x[(1, j)]) / 2.0).abs() < 1e-10);
    }
}

#[test]
fn signature_star_leaf_permutation() {
    let mut rng = rng_from(21);
    let leaf = Tensor::uniform(1, 4, 1.0, &mut rng);
    let center = Tensor::uniform(1, 4, 1.0, &mut rng);
    let a = sub(0, &[1, 2, 3], &[(0, 1), (0, 2), (0, 3)]);
    let b = sub(0, &[5, 6, 7], &[(0, 7), (0, 5), (0, 6)]);
    let mut data = center.data().to_vec();
    for _ in 0..3 {
        data.extend_from_slice(leaf.data());
    }
    let x = Tensor::from_vec(4, 4, data).unwrap();
    let ma = infinite_depth_signature(&a, &x).unwrap();
    let mb = infinite_depth_signature(&b, &x).unwrap();
    for (p, q) in ma.iter().zip(&mb) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn signature_separates_different_subgraphs() {
    // shared 8-node graph: a cycle with one chord
    let mut rng = rng_from(31);
    let x_all = Tensor::uniform(8, 6, 1.0, &mut rng);
    let rows = |s: &Subgraph| {
        let data: Vec<f64> = s.entities().iter().flat_map(|e| x_all.row(e.index()).to_vec()).collect();
        Tensor::from_vec(s.len(), 6, data).unwrap()
    };
    let su = sub(0, &[1, 2, 7], &[(0, 1), (1, 2), (0, 7)]);
    let sv = sub(4, &[3, 5, 2], &[(3, 4), (4, 5), (2, 3)]);
    let mu = infinite_depth_signature(&su, &rows(&su)).unwrap();
    let mv = infinite_depth_signature(&sv, &rows(&sv)).unwrap();
    let dist: f64 = mu.iter().zip(&mv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    assert!(dist > 1e-6);
}

#[test]
fn perron_vector_path() {
    // path of 3: eigenvalue sqrt(2), vector (1, sqrt2, 1)/2
    let e = perron_vector(&[vec![1], vec![0, 2], vec![1]]).unwrap();
    assert!((e[0] - 0.5).abs() < 1e-9 && (e[1] - 0.5f64.sqrt()).abs() < 1e-9 && (e[2] - 0.5).abs() < 1e-9);
}
