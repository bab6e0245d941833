//! Limit of infinitely deep mean aggregation over a subgraph:
//! `m = sqrt(δ(u) / Σ_v δ(v)) · eᵀ X`, where `e` is the unit Perron vector
//! of the subgraph adjacency and `δ` the in-subgraph degree.

use crate::error::{Error, Result};
use crate::numcore::Tensor;
use crate::sampler::Subgraph;

const TOL: f64 = 1e-10;
const MAX_ITERS: usize = 100_000;

/// Unit leading eigenvector of the symmetric adjacency given by `nb`,
/// found by power iteration on `A + I` from the all-ones vector. The sign
/// is fixed so the largest-magnitude component is positive.
pub fn perron_vector(nb: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = nb.len();
    if n == 0 {
        return Err(Error::Empty("perron_vector graph"));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..MAX_ITERS {
        let mut y = x.clone();
        for (u, l) in nb.iter().enumerate() {
            for &v in l {
                y[u] += x[v];
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if diff < TOL {
            let (mut best, mut arg) = (0.0, 0);
            for (i, v) in x.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    arg = i;
                }
            }
            if x[arg] < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(x);
        }
    }
    Err(Error::Numeric(format!("power iteration did not converge in {MAX_ITERS} steps")))
}

/// Signature of `sub` given initial embeddings `x` (rows aligned with the
/// subgraph's local order). Nodes are processed in ascending global id, so
/// the same subgraph always produces bitwise-identical output whichever
/// local order or center it carries.
pub fn infinite_depth_signature(sub: &Subgraph, x: &Tensor) -> Result<Vec<f64>> {
    let n = sub.len();
    if x.rows() != n {
        return Err(Error::Shape {
            op: "infinite_depth_signature",
            lhs: x.shape(),
            rhs: (n, x.cols()),
        });
    }
    if sub.edges().is_empty() {
        return Err(Error::Numeric("signature is undefined for a subgraph without edges".into()));
    }
    if !sub.reachable_from_center().iter().all(|&r| r) {
        return Err(Error::Numeric("signature requires a subgraph connected from its center".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| sub.entities()[i]);
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let local_nb = sub.neighbor_lists();
    let mut nb: Vec<Vec<usize>> = order
        .iter()
        .map(|&i| local_nb[i].iter().map(|&v| pos[v]).collect())
        .collect();
    nb.iter_mut().for_each(|l| l.sort_unstable());
    let e = perron_vector(&nb)?;
    let total: usize = nb.iter().map(Vec::len).sum();
    let scale = (nb[pos[0]].len() as f64 / total as f64).sqrt();
    let mut m = vec![0.0; x.cols()];
    for (p, &i) in order.iter().enumerate() {
        for (mj, xj) in m.iter_mut().zip(x.row(i)) {
            *mj += e[p] * xj;
        }
    }
    m.iter_mut().for_each(|v| *v *= scale);
    Ok(m)
}
