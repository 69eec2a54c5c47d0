//! First-order optimizers with global-norm gradient clipping.

use crate::error::{Error, Result};
use crate::graph::Gradients;
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 norm threshold; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip: Some(5.0),
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            lr,
            clip: None,
            ..Default::default()
        }
    }
}

/// Rescales `grads` in place so their global norm is at most `max_norm`.
/// Returns the factor applied (1 when no clipping happened).
pub fn clip_global_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: T) -> T {
    let norm = grads.global_norm();
    if norm > max_norm && norm > T::zero() {
        let factor = max_norm / norm;
        grads.scale(factor);
        factor
    } else {
        T::one()
    }
}

#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    pub config: OptimizerConfig,
    step: u64,
    // Moments are allocated on first touch; an absent moment is all zeros.
    first: Vec<Option<Tensor<T>>>,
    second: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Self {
        Optimizer {
            config,
            step: 0,
            first: vec![None; n_params],
            second: vec![None; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, index: usize) -> Option<&Tensor<T>> {
        self.first[index].as_ref()
    }

    /// Applies one update. Gradients are consumed because clipping rescales
    /// them.
    pub fn step(&mut self, store: &mut ParamStore<T>, mut grads: Gradients<T>) -> Result<()> {
        if grads.len() != store.len() || self.first.len() != store.len() {
            return Err(Error::Contract(format!(
                "optimizer over {} parameters given {} gradients for a store of {}",
                self.first.len(),
                grads.len(),
                store.len()
            )));
        }
        for (id, g) in grads.iter() {
            if g.shape() != store.get(id).shape() {
                return Err(Error::Shape {
                    op: "optimizer_step",
                    left: g.shape().to_vec(),
                    right: store.get(id).shape().to_vec(),
                });
            }
            if let Some(index) = g.first_non_finite() {
                return Err(Error::NonFinite {
                    what: format!("gradient of {}", store.name(id)),
                    index,
                });
            }
        }
        if let Some(clip) = self.config.clip {
            clip_global_norm(&mut grads, T::of(clip));
        }
        self.step += 1;
        let lr = T::of(self.config.lr);
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (id, g) in grads.iter() {
                    for (p, &d) in store.get_mut(id).data_mut().iter_mut().zip(g.data()) {
                        *p -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let b1 = T::of(self.config.beta1);
                let b2 = T::of(self.config.beta2);
                let eps = T::of(self.config.epsilon);
                let t = self.step as i32;
                let corr1 = T::one() - b1.powi(t);
                let corr2 = T::one() - b2.powi(t);
                for id in store.ids().collect::<Vec<_>>() {
                    let i = id.index();
                    let g = grads.get(id);
                    if g.is_none() && self.first[i].is_none() {
                        continue;
                    }
                    let shape = store.get(id).shape().to_vec();
                    let m = self.first[i].get_or_insert_with(|| Tensor::zeros(&shape));
                    let v = self.second[i].get_or_insert_with(|| Tensor::zeros(&shape));
                    let param = store.get_mut(id).data_mut();
                    for k in 0..param.len() {
                        let d = g.map_or(T::zero(), |g| g.data()[k]);
                        let mk = &mut m.data_mut()[k];
                        *mk = b1 * *mk + (T::one() - b1) * d;
                        let vk = &mut v.data_mut()[k];
                        *vk = b2 * *vk + (T::one() - b2) * d * d;
                        let m_hat = m.data()[k] / corr1;
                        let v_hat = v.data()[k] / corr2;
                        param[k] -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One scalar parameter `theta = v` whose gradient is `g` (root = g·theta).
    fn single(v: f64, g: f64) -> (ParamStore<f64>, Gradients<f64>) {
        let mut store = ParamStore::new();
        let id = store.add("theta", Tensor::vector(vec![v])).unwrap();
        let grads = {
            let mut graph = crate::graph::Graph::new(&store);
            let p = graph.param(id);
            let c = graph.input_vector(&[g]);
            let prod = graph.mul(p, c).unwrap();
            let root = graph.sum(prod);
            graph.backward(root).unwrap()
        };
        (store, grads)
    }

    #[test]
    fn sgd_step() {
        let (mut store, grads) = single(1.0, 2.0);
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.1), 1);
        opt.step(&mut store, grads).unwrap();
        let theta = store.get(store.id("theta").unwrap()).item();
        assert!((theta - 0.8).abs() < 1e-15);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn adam_first_step_is_scale_free() {
        for g in [1e-4, 0.3, 2.0, 1e3] {
            let (mut store, grads) = single(0.0, g);
            let cfg = OptimizerConfig {
                clip: None,
                ..Default::default()
            };
            let mut opt = Optimizer::new(cfg, 1);
            opt.step(&mut store, grads).unwrap();
            let moved = store.get(store.id("theta").unwrap()).item().abs();
            assert!((moved - 1e-3).abs() < 1e-6, "g={g} moved={moved}");
        }
    }

    #[test]
    fn clipping_halves_norm_ten_gradients() {
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::<f64>::vector(vec![0.0, 0.0])).unwrap();
        let mut graph = crate::graph::Graph::new(&store);
        let p = graph.param(a);
        let c = graph.input_vector(&[6.0, 8.0]);
        let prod = graph.mul(p, c).unwrap();
        let root = graph.sum(prod);
        let mut grads = graph.backward(root).unwrap();
        assert!((grads.global_norm() - 10.0).abs() < 1e-12);
        let factor = clip_global_norm(&mut grads, 5.0);
        assert!((factor - 0.5).abs() < 1e-15);
        assert_eq!(grads.get(a).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let (mut store, grads) = single(1.0, f64::INFINITY);
        let mut opt = Optimizer::new(OptimizerConfig::default(), 1);
        let err = opt.step(&mut store, grads).unwrap_err();
        assert!(err.to_string().contains("theta"), "{err}");
    }

    #[test]
    fn untouched_parameters_stay_put_under_adam() {
        let mut store = ParamStore::new();
        store.add("a", Tensor::vector(vec![0.5])).unwrap();
        let before = store.clone();
        let mut opt = Optimizer::new(OptimizerConfig::default(), 1);
        for _ in 0..3 {
            opt.step(&mut store, Gradients::empty(1)).unwrap();
        }
        assert_eq!(store, before);
    }
}
