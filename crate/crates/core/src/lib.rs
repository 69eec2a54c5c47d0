//! Attention-weighted prediction of embeddings for out-of-vocabulary words,
//! trained jointly with a bi-LSTM sequence tagger.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the double-precision instantiation used for training and
//! gradient checking.

pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod nn;
pub mod optim;
pub mod params;
pub mod predictor;
pub mod scalar;
pub mod synthetic;
pub mod tagger;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use corpus::{Sentence, Task, Token};
pub use model::{ModelDims, OovMode, TrainConfig};
pub use predictor::{AttentionTriple, Window};

pub type Tensor = tensor::Tensor<f64>;
pub type ParamStore = params::ParamStore<f64>;
pub type Graph<'p> = graph::Graph<'p, f64>;
pub type Gradients = graph::Gradients<f64>;
pub type Optimizer = optim::Optimizer<f64>;
pub type EmbeddingTable = corpus::EmbeddingTable<f64>;
pub type Model = model::Model<f64>;

pub type TensorF32 = tensor::Tensor<f32>;
pub type ModelF32 = model::Model<f32>;
