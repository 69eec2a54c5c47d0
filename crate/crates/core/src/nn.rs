//! LSTM cells, bidirectional encoders and affine layers on top of [`Graph`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gate order inside [`LstmParams::weights`] and [`LstmParams::biases`].
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CANDIDATE: usize = 3;
pub const GATE_NAMES: [&str; 4] = ["input", "forget", "output", "candidate"];

/// One LSTM direction. Every gate weight is `[hidden, input + hidden]` and
/// multiplies `concat(x, h_prev)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub weights: [ParamId; 4],
    pub biases: [ParamId; 4],
}

impl LstmParams {
    /// Glorot-uniform weights, zero biases, forget bias 1.
    pub fn init<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(4);
        let mut biases = Vec::with_capacity(4);
        for (gate, name) in GATE_NAMES.iter().enumerate() {
            let w = glorot_uniform(hidden_dim, input_dim + hidden_dim, rng);
            weights.push(store.add(format!("{prefix}.w_{name}"), w)?);
            let fill = if gate == GATE_FORGET { T::one() } else { T::zero() };
            biases.push(store.add(
                format!("{prefix}.b_{name}"),
                Tensor::filled(&[hidden_dim], fill),
            )?);
        }
        Ok(LstmParams {
            input_dim,
            hidden_dim,
            weights: weights.try_into().expect("four gates"),
            biases: biases.try_into().expect("four gates"),
        })
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.weights.iter().chain(&self.biases).copied()
    }
}

/// Forward and backward LSTM plus the trainable vector standing in for an
/// empty input sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub empty: Option<ParamId>,
}

impl BiLstm {
    pub fn init<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        with_sentinel: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let fwd = LstmParams::init(store, &format!("{prefix}.fwd"), input_dim, hidden_dim, rng)?;
        let bwd = LstmParams::init(store, &format!("{prefix}.bwd"), input_dim, hidden_dim, rng)?;
        let empty = if with_sentinel {
            Some(store.add(format!("{prefix}.empty"), Tensor::zeros(&[2 * hidden_dim]))?)
        } else {
            None
        };
        Ok(BiLstm { fwd, bwd, empty })
    }

    pub fn output_dim(&self) -> usize {
        self.fwd.hidden_dim + self.bwd.hidden_dim
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.fwd
            .param_ids()
            .chain(self.bwd.param_ids())
            .chain(self.empty)
    }
}

fn check_len<T: Scalar>(g: &Graph<T>, v: Var, want: usize, op: &'static str) -> Result<()> {
    let shape = g.shape(v);
    if shape != [want] {
        return Err(Error::Shape {
            op,
            left: shape.to_vec(),
            right: vec![want],
        });
    }
    Ok(())
}

/// One LSTM time step; returns `(h, c)`.
///
/// ```text
/// i = σ(W_i [x; h] + b_i)    f = σ(W_f [x; h] + b_f)
/// o = σ(W_o [x; h] + b_o)    g = tanh(W_g [x; h] + b_g)
/// c' = f ⊙ c + i ⊙ g         h' = o ⊙ tanh(c')
/// ```
pub fn lstm_step<T: Scalar>(
    g: &mut Graph<T>,
    x: Var,
    h_prev: Var,
    c_prev: Var,
    p: &LstmParams,
) -> Result<(Var, Var)> {
    check_len(g, x, p.input_dim, "lstm_step input")?;
    check_len(g, h_prev, p.hidden_dim, "lstm_step hidden state")?;
    check_len(g, c_prev, p.hidden_dim, "lstm_step cell state")?;
    let xh = g.concat(&[x, h_prev])?;
    let mut pre = [xh; 4];
    for gate in 0..4 {
        let w = g.param(p.weights[gate]);
        let b = g.param(p.biases[gate]);
        pre[gate] = linear(g, xh, w, b)?;
    }
    let i = g.sigmoid(pre[GATE_INPUT]);
    let f = g.sigmoid(pre[GATE_FORGET]);
    let o = g.sigmoid(pre[GATE_OUTPUT]);
    let cand = g.tanh(pre[GATE_CANDIDATE]);
    let keep = g.mul(f, c_prev)?;
    let write = g.mul(i, cand)?;
    let c = g.add(keep, write)?;
    let squashed = g.tanh(c);
    let h = g.mul(o, squashed)?;
    Ok((h, c))
}

fn zero_state<T: Scalar>(g: &mut Graph<T>, dim: usize) -> Var {
    g.input(Tensor::zeros(&[dim]))
}

/// Runs one direction over `seq` from zero state, returning every hidden state.
pub fn lstm_run<T: Scalar>(g: &mut Graph<T>, seq: &[Var], p: &LstmParams) -> Result<Vec<Var>> {
    let mut h = zero_state(g, p.hidden_dim);
    let mut c = zero_state(g, p.hidden_dim);
    let mut out = Vec::with_capacity(seq.len());
    for &x in seq {
        (h, c) = lstm_step(g, x, h, c, p)?;
        out.push(h);
    }
    Ok(out)
}

/// Final forward state concatenated with the final state of the backward
/// pass, which reads `seq` reversed. An empty sequence encodes to the
/// sentinel vector (zeros when the encoder has none).
pub fn bilstm_encode<T: Scalar>(g: &mut Graph<T>, seq: &[Var], p: &BiLstm) -> Result<Var> {
    if seq.is_empty() {
        return Ok(match p.empty {
            Some(id) => g.param(id),
            None => zero_state(g, p.output_dim()),
        });
    }
    let fwd = lstm_run(g, seq, &p.fwd)?;
    let rev: Vec<Var> = seq.iter().rev().copied().collect();
    let bwd = lstm_run(g, &rev, &p.bwd)?;
    g.concat(&[*fwd.last().expect("non-empty"), *bwd.last().expect("non-empty")])
}

/// Per-position `concat(h_fwd[t], h_bwd[t])` for sequence labelling.
pub fn bilstm_states<T: Scalar>(g: &mut Graph<T>, seq: &[Var], p: &BiLstm) -> Result<Vec<Var>> {
    let fwd = lstm_run(g, seq, &p.fwd)?;
    let rev: Vec<Var> = seq.iter().rev().copied().collect();
    let mut bwd = lstm_run(g, &rev, &p.bwd)?;
    bwd.reverse();
    fwd.into_iter()
        .zip(bwd)
        .map(|(f, b)| g.concat(&[f, b]))
        .collect()
}

/// `w · x + b`.
pub fn linear<T: Scalar>(g: &mut Graph<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = g.matvec(w, x)?;
    g.add(y, b)
}
