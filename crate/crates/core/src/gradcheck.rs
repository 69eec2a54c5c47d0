//! Central finite-difference verification of [`Graph::backward`].

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares the backward pass of `f` against
/// `(f(θ + eps·e) - f(θ - eps·e)) / (2·eps)` on every coordinate of every
/// parameter in `store`.
pub fn grad_check<T, F>(store: &ParamStore<T>, f: F, eps: f64) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&mut Graph<T>) -> Result<Var>,
{
    let ids: Vec<ParamId> = store.ids().collect();
    grad_check_params(store, &ids, f, eps)
}

/// As [`grad_check`], restricted to `ids`.
pub fn grad_check_params<T, F>(
    store: &ParamStore<T>,
    ids: &[ParamId],
    f: F,
    eps: f64,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&mut Graph<T>) -> Result<Var>,
{
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    for c in finite_differences(store, ids, f, eps)? {
        let err = c.relative_error();
        report.coordinates += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = err;
            report.worst = Some((c.name, c.index));
        }
    }
    Ok(report)
}

/// One parameter coordinate: backward-pass value against the central
/// difference.
#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Coordinate {
    pub fn relative_error(&self) -> f64 {
        relative_error(self.analytic, self.numeric)
    }

    pub fn absolute_error(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }
}

/// Per-coordinate comparison underlying [`grad_check_params`].
pub fn finite_differences<T, F>(
    store: &ParamStore<T>,
    ids: &[ParamId],
    f: F,
    eps: f64,
) -> Result<Vec<Coordinate>>
where
    T: Scalar,
    F: Fn(&mut Graph<T>) -> Result<Var>,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let analytic = {
        let mut g = Graph::new(store);
        let root = f(&mut g)?;
        g.backward(root)?
    };
    let eval = |s: &ParamStore<T>| -> Result<f64> {
        let mut g = Graph::new(s);
        let root = f(&mut g)?;
        Ok(g.scalar(root).as_f64())
    };

    let mut probe = store.clone();
    let mut out = Vec::new();
    for &id in ids {
        let dense = analytic.dense(id, store);
        for k in 0..store.get(id).len() {
            let orig = store.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = orig + T::of(eps);
            let plus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig - T::of(eps);
            let minus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig;
            out.push(Coordinate {
                name: store.name(id).to_string(),
                index: k,
                analytic: dense.data()[k].as_f64(),
                numeric: (plus - minus) / (2.0 * eps),
            });
        }
    }
    Ok(out)
}
