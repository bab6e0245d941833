//! Randomized finite-difference checks for every tape primitive.
//!
//! Each case builds the primitive on random parameter inputs of shape up to
//! 16×16 and reduces the output to a scalar through a Frobenius product
//! with a random constant, so every output entry contributes to the
//! gradient.

use std::sync::Arc;

use rand::Rng as _;

use crate::error::Result;
use crate::numcore::gradcheck::grad_check;
use crate::numcore::params::ParameterStore;
use crate::numcore::tape::{Tape, Var};
use crate::numcore::tensor::Tensor;
use crate::rng::{rng_from, Rng};

pub const PRIMITIVES: &[&str] = &[
    "matmul",
    "matmul_t",
    "transpose",
    "add",
    "sub",
    "add_row",
    "scale",
    "add_scalar",
    "concat_cols",
    "stack_rows",
    "slice_rows",
    "gather_rows",
    "param_rows",
    "masked_softmax_rows",
    "outer_sum",
    "mask",
    "leaky_relu",
    "tanh",
    "mean_rows",
    "dot",
    "sum_sq",
    "sum_sq_rows",
    "sum",
    "hinge",
];

fn dim(rng: &mut Rng) -> usize {
    rng.gen_range(1..=16)
}

// Entries bounded away from zero so hinge and LeakyReLU kinks are never
// within a finite-difference step.
fn away_from_zero(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let m = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::from_vec(rows, cols, data).expect("sized buffer")
}

fn reduce(tape: &mut Tape, out: Var, probe: &Tensor) -> Result<Var> {
    let c = tape.constant(probe.clone());
    tape.dot(out, c)
}

/// Runs the finite-difference check for one named primitive and returns the
/// max relative error.
pub fn check_primitive(name: &str, seed: u64, h: f64) -> Result<f64> {
    let mut rng = rng_from(seed);
    let mut store = ParameterStore::new();
    let (r, c, k) = (dim(&mut rng), dim(&mut rng), dim(&mut rng));
    let add = |store: &mut ParameterStore, n: &str, t: Tensor| store.add(n, t).expect("fresh name");
    macro_rules! probe {
        ($rows:expr, $cols:expr) => {
            Tensor::uniform($rows, $cols, 1.0, &mut rng)
        };
    }
    match name {
        "matmul" => {
            let a = add(&mut store, "a", Tensor::uniform(r, k, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(k, c, 1.0, &mut rng));
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.matmul(a, b)?;
                reduce(t, o, &p)
            })
        }
        "matmul_t" => {
            let a = add(&mut store, "a", Tensor::uniform(r, k, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(c, k, 1.0, &mut rng));
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.matmul_t(a, b)?;
                reduce(t, o, &p)
            })
        }
        "transpose" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let p = probe!(c, r);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = t.transpose(a);
                reduce(t, o, &p)
            })
        }
        "add" | "sub" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(r, c, 1.0, &mut rng));
            let p = probe!(r, c);
            let is_add = name == "add";
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = if is_add { t.add(a, b)? } else { t.sub(a, b)? };
                reduce(t, o, &p)
            })
        }
        "add_row" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let b = add(&mut store, "row", Tensor::uniform(1, c, 1.0, &mut rng));
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.add_row(a, b)?;
                reduce(t, o, &p)
            })
        }
        "scale" | "add_scalar" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let k: f64 = rng.gen_range(-2.0..2.0);
            let p = probe!(r, c);
            let is_scale = name == "scale";
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = if is_scale { t.scale(a, k) } else { t.add_scalar(a, k) };
                reduce(t, o, &p)
            })
        }
        "concat_cols" => {
            let c2 = dim(&mut rng);
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(r, c2, 1.0, &mut rng));
            let p = probe!(r, 2 * c + c2);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.concat_cols(&[a, b, a])?;
                reduce(t, o, &p)
            })
        }
        "stack_rows" => {
            let r2 = dim(&mut rng);
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(r2, c, 1.0, &mut rng));
            let p = probe!(2 * r + r2, c);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.stack_rows(&[a, b, a])?;
                reduce(t, o, &p)
            })
        }
        "slice_rows" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let start = rng.gen_range(0..r);
            let len = rng.gen_range(1..=r - start);
            let p = probe!(len, c);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = t.slice_rows(a, start, len)?;
                reduce(t, o, &p)
            })
        }
        "gather_rows" | "param_rows" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let rows: Vec<usize> = (0..k).map(|_| rng.gen_range(0..r)).collect();
            let p = probe!(k, c);
            let leaf = name == "param_rows";
            grad_check(&mut store, h, |t, s| {
                let o = if leaf {
                    t.param_rows(s, a, &rows)?
                } else {
                    let a = t.param(s, a);
                    t.gather_rows(a, &rows)?
                };
                reduce(t, o, &p)
            })
        }
        "masked_softmax_rows" | "mask" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 2.0, &mut rng));
            let mut keep: Vec<bool> = (0..r * c).map(|_| rng.gen_bool(0.7)).collect();
            for i in 0..r {
                let j = rng.gen_range(0..c);
                keep[i * c + j] = true;
            }
            let keep = Arc::new(keep);
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let m = t.mask(a, keep.clone())?;
                let o = t.masked_softmax_rows(m)?;
                reduce(t, o, &p)
            })
        }
        "outer_sum" => {
            let a = add(&mut store, "s", Tensor::uniform(r, 1, 1.0, &mut rng));
            let b = add(&mut store, "t", Tensor::uniform(c, 1, 1.0, &mut rng));
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                let o = t.outer_sum(a, b)?;
                reduce(t, o, &p)
            })
        }
        "leaky_relu" | "hinge" => {
            let a = add(&mut store, "a", away_from_zero(r, c, &mut rng));
            let p = probe!(r, c);
            let leaky = name == "leaky_relu";
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = if leaky { t.leaky_relu(a, 0.2) } else { t.hinge(a) };
                reduce(t, o, &p)
            })
        }
        "tanh" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 2.0, &mut rng));
            let p = probe!(r, c);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = t.tanh(a);
                reduce(t, o, &p)
            })
        }
        "mean_rows" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let rows: Vec<usize> = (0..k).map(|_| rng.gen_range(0..r)).collect();
            let p = probe!(1, c);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = t.mean_rows(a, &rows)?;
                reduce(t, o, &p)
            })
        }
        "dot" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let b = add(&mut store, "b", Tensor::uniform(r, c, 1.0, &mut rng));
            grad_check(&mut store, h, |t, s| {
                let (a, b) = (t.param(s, a), t.param(s, b));
                t.dot(a, b)
            })
        }
        "sum_sq" | "sum" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let sq = name == "sum_sq";
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                Ok(if sq { t.sum_sq(a) } else { t.sum(a) })
            })
        }
        "sum_sq_rows" => {
            let a = add(&mut store, "a", Tensor::uniform(r, c, 1.0, &mut rng));
            let p = probe!(r, 1);
            grad_check(&mut store, h, |t, s| {
                let a = t.param(s, a);
                let o = t.sum_sq_rows(a);
                reduce(t, o, &p)
            })
        }
        other => Err(crate::error::Error::Config(format!("unknown primitive '{other}'"))),
    }
}

/// Checks every primitive in [`PRIMITIVES`] with `trials` random draws each,
/// returning the worst relative error per primitive.
pub fn primitive_suite(seed: u64, trials: usize) -> Result<Vec<(&'static str, f64)>> {
    let mut out = Vec::new();
    for (i, &name) in PRIMITIVES.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let s = crate::rng::mix(seed, &[i as u64, trial as u64]);
            worst = worst.max(check_primitive(name, s, 1e-6)?);
        }
        out.push((name, worst));
    }
    Ok(out)
}
