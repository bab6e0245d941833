//! Central finite-difference verification of tape gradients.

use crate::error::{Error, Result};
use crate::numcore::params::{ParamId, ParameterStore};
use crate::numcore::tape::{Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// max over all checked entries of `|g_tape − g_fd| / max(1, |g_fd|)`
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

fn eval<F>(store: &ParameterStore, f: &F) -> Result<f64>
where
    F: Fn(&mut Tape, &ParameterStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, store)?;
    let v = tape.value(out);
    if v.shape() != (1, 1) {
        return Err(Error::Shape {
            op: "grad_check",
            lhs: v.shape(),
            rhs: (1, 1),
        });
    }
    let v = v.item();
    if !v.is_finite() {
        return Err(Error::Numeric(format!("objective evaluated to {v}")));
    }
    Ok(v)
}

/// Compares tape gradients of the scalar `f` against central differences
/// with step `h` over every parameter in `store`. Existing gradients in the
/// store are overwritten.
pub fn grad_check<F>(store: &mut ParameterStore, h: f64, f: F) -> Result<f64>
where
    F: Fn(&mut Tape, &ParameterStore) -> Result<Var>,
{
    let ids: Vec<ParamId> = store.ids().collect();
    Ok(grad_check_params(store, &ids, h, f)?.max_rel_error)
}

pub fn grad_check_params<F>(store: &mut ParameterStore, ids: &[ParamId], h: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParameterStore) -> Result<Var>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    store.zero_grads();
    let mut tape = Tape::new();
    let out = f(&mut tape, store)?;
    if !tape.value(out).is_finite() {
        return Err(Error::Numeric("objective is not finite".into()));
    }
    tape.backward(out, store)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for &id in ids {
        let analytic = store.grad(id).clone();
        for i in 0..analytic.len() {
            let orig = store.value(id).data()[i];
            store.value_mut(id).data_mut()[i] = orig + h;
            let plus = eval(store, &f);
            store.value_mut(id).data_mut()[i] = orig - h;
            let minus = eval(store, &f);
            store.value_mut(id).data_mut()[i] = orig;
            let fd = (plus? - minus?) / (2.0 * h);
            let err = (analytic.data()[i] - fd).abs() / fd.abs().max(1.0);
            report.checked += 1;
            if report.checked == 1 || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = store.name(id).to_string();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::tensor::Tensor;

    #[test]
    fn quadratic_is_exact() {
        let mut store = ParameterStore::new();
        let id = store
            .add("theta", Tensor::row_vector(vec![0.3, -1.2, 2.0, 0.0]))
            .unwrap();
        let err = grad_check(&mut store, 1e-6, |tape, s| {
            let x = tape.param(s, id);
            Ok(tape.sum_sq(x))
        })
        .unwrap();
        assert!(err < 1e-9, "{err}");
        assert_eq!(store.grad(id).data(), &[0.6, -2.4, 4.0, 0.0]);
    }

    #[test]
    fn rejects_bad_step_and_non_finite() {
        let mut store = ParameterStore::new();
        let id = store.add("x", Tensor::scalar(1.0)).unwrap();
        assert!(grad_check(&mut store, 0.0, |t, s| Ok(t.param(s, id))).is_err());
        let r = grad_check(&mut store, 1e-6, |t, s| {
            let x = t.param(s, id);
            Ok(t.scale(x, f64::INFINITY))
        });
        assert!(r.is_err());
    }
}
