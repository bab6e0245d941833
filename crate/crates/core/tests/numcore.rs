use proptest::prelude::*;
use rete::numcore::suite::{primitive_suite, PRIMITIVES};
use rete::numcore::*;
use rete::rng::rng_from;
use rete::selftest::run_all;

#[test]
fn every_primitive_has_a_gradient_check() {
    let res = primitive_suite(3, 2).unwrap();
    assert_eq!(res.len(), PRIMITIVES.len());
    for (name, err) in res {
        assert!(err < 1e-5, "{name}: {err}");
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let mut store = ParameterStore::new();
    let mut rng = rng_from(1);
    store.add("a", Tensor::xavier(3, 4, &mut rng)).unwrap();
    store.add("b.c", Tensor::scalar(-0.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    checkpoint::save(&store, &path).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert!(back.values_equal(&store));
    let bytes = std::fs::read(&path).unwrap();
    assert!(checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] ^= 1;
    assert!(checkpoint::decode(&bad).is_err());
    assert!(checkpoint::load(&dir.path().join("missing")).is_err());
}

#[test]
fn selftest_suites_pass() {
    for c in run_all(0).unwrap() {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}

proptest! {
    #[test]
    fn matmul_matches_triple_loop(r in 1usize..6, k in 1usize..6, c in 1usize..6, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let a = Tensor::uniform(r, k, 1.0, &mut rng);
        let b = Tensor::uniform(k, c, 1.0, &mut rng);
        let m = a.matmul(&b).unwrap();
        for i in 0..r {
            for j in 0..c {
                let want: f64 = (0..k).map(|x| a[(i, x)] * b[(x, j)]).sum();
                prop_assert!((m[(i, j)] - want).abs() < 1e-12);
            }
        }
        prop_assert!(a.matmul(&a).is_err() || r == k);
    }
}
