//! Bi-LSTM sequence tagger over assembled word embeddings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{EmbeddingTable, Sentence};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::model::{Model, OovMode};
use crate::nn::{bilstm_states, linear, BiLstm};
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::predictor::{predict_oov, AttentionTriple};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Half-width of the uniform distribution for random-baseline vectors.
pub const RANDOM_OOV_RANGE: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerParams {
    pub lstm: BiLstm,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl TaggerParams {
    pub fn init<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        d_emb: usize,
        hidden: usize,
        n_tags: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let lstm = BiLstm::init(store, "tagger.lstm", d_emb, hidden, false, rng)?;
        let out_w = store.add("tagger.out_w", glorot_uniform(n_tags, 2 * hidden, rng))?;
        let out_b = store.add("tagger.out_b", Tensor::zeros(&[n_tags]))?;
        Ok(TaggerParams { lstm, out_w, out_b })
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.lstm.param_ids().collect();
        ids.extend([self.out_w, self.out_b]);
        ids
    }
}

/// Fixed random vector for an OOV word type, drawn from U(-0.25, 0.25).
///
/// The draw is keyed by `(seed, word)`, so a type receives the same vector
/// wherever and whenever it occurs within a run, with no shared cache.
pub fn random_oov_vector<T: Scalar>(seed: u64, word: &str, dim: usize) -> Vec<T> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(word.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..dim)
        .map(|_| T::of(rng.gen_range(-RANDOM_OOV_RANGE..RANDOM_OOV_RANGE)))
        .collect()
}

/// Per-token embeddings of one sentence plus, for tokens routed through the
/// predictor, their attention nodes.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub embeddings: Vec<Var>,
    pub attention: Vec<Option<Var>>,
}

pub fn assemble_embeddings<T: Scalar>(
    g: &mut Graph<T>,
    sentence: &Sentence,
    mode: OovMode,
    model: &Model<T>,
    table: &EmbeddingTable<T>,
) -> Result<Assembled> {
    if mode == OovMode::Predictor && model.predictor.is_none() {
        return Err(Error::Config(
            "predictor mode requires predictor parameters".into(),
        ));
    }
    let sources = model.sources(table);
    let mut embeddings = Vec::with_capacity(sentence.len());
    let mut attention = vec![None; sentence.len()];
    for (i, token) in sentence.tokens.iter().enumerate() {
        let v = if !token.is_oov {
            let src = sources.resolve(token);
            sources.var(g, src)?
        } else {
            match mode {
                OovMode::Predictor => {
                    let p = model.predictor.as_ref().expect("checked above");
                    let pred = predict_oov(g, sentence, i, model.config.window, p, &sources)?;
                    attention[i] = Some(pred.attention);
                    pred.embedding
                }
                OovMode::Random => {
                    let v = random_oov_vector(model.config.seed, &token.surface, model.d_emb);
                    g.input_vector(&v)
                }
                OovMode::Unk => g.param(model.unk),
            }
        };
        embeddings.push(v);
    }
    Ok(Assembled {
        embeddings,
        attention,
    })
}

/// Tag distributions for each position: bi-LSTM states, then linear and
/// softmax per token.
pub fn tag_scores<T: Scalar>(g: &mut Graph<T>, embeddings: &[Var], p: &TaggerParams) -> Result<Vec<Var>> {
    if embeddings.is_empty() {
        return Err(Error::Contract("cannot tag an empty sentence".into()));
    }
    let states = bilstm_states(g, embeddings, &p.lstm)?;
    let w = g.param(p.out_w);
    let b = g.param(p.out_b);
    states
        .into_iter()
        .map(|h| {
            let logits = linear(g, h, w, b)?;
            g.softmax(logits)
        })
        .collect()
}

/// Mean token cross-entropy.
pub fn sentence_loss<T: Scalar>(g: &mut Graph<T>, scores: &[Var], gold: &[usize]) -> Result<Var> {
    if scores.len() != gold.len() {
        return Err(Error::Contract(format!(
            "{} score rows for {} gold tags",
            scores.len(),
            gold.len()
        )));
    }
    let losses = scores
        .iter()
        .zip(gold)
        .map(|(&s, &y)| g.cross_entropy(s, y))
        .collect::<Result<Vec<_>>>()?;
    g.mean(&losses)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Graph-free outputs for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceOutput<T> {
    pub probs: Vec<Vec<T>>,
    pub attention: Vec<Option<AttentionTriple>>,
}

impl<T: Scalar> SentenceOutput<T> {
    pub fn tag_ids(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }
}

/// Forward pass using the model's own OOV mode.
pub fn run_sentence<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentence: &Sentence,
) -> Result<SentenceOutput<T>> {
    let mut g = Graph::new(&model.store);
    let asm = assemble_embeddings(&mut g, sentence, model.config.oov_mode, model, table)?;
    let scores = tag_scores(&mut g, &asm.embeddings, &model.tagger)?;
    Ok(SentenceOutput {
        probs: scores.iter().map(|&s| g.value(s).to_vec()).collect(),
        attention: asm
            .attention
            .iter()
            .map(|a| a.map(|a| AttentionTriple::from_slice(g.value(a))))
            .collect(),
    })
}

pub fn predict_tags<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentence: &Sentence,
) -> Result<Vec<String>> {
    let out = run_sentence(model, table, sentence)?;
    Ok(out
        .tag_ids()
        .into_iter()
        .map(|i| model.tags[i].clone())
        .collect())
}
