//! Embedding prediction for out-of-vocabulary words.
//!
//! The word's characters, its left context and its right context are each
//! encoded by a bi-LSTM. A single linear layer scores the three encodings
//! jointly, a softmax turns the scores into attention weights, and the
//! weighted sum of the encodings is projected to the embedding space.

use rand::Rng;

use crate::corpus::{EmbeddingTable, Sentence, Token, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::nn::{bilstm_encode, linear, BiLstm};
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Attention weights over (characters, left context, right context).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttentionTriple {
    pub word: f64,
    pub left: f64,
    pub right: f64,
}

impl AttentionTriple {
    pub fn from_slice<T: Scalar>(v: &[T]) -> Self {
        AttentionTriple {
            word: v[0].as_f64(),
            left: v[1].as_f64(),
            right: v[2].as_f64(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.word + self.left + self.right
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.word, self.left, self.right]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorParams {
    pub char_emb: ParamId,
    pub chars: BiLstm,
    pub left: BiLstm,
    pub right: BiLstm,
    pub attn_w: ParamId,
    pub attn_b: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl PredictorParams {
    pub fn init<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        n_chars: usize,
        d_char: usize,
        hidden: usize,
        d_emb: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let char_emb = store.add("pred.char_emb", glorot_uniform(n_chars, d_char, rng))?;
        let chars = BiLstm::init(store, "pred.chars", d_char, hidden, true, rng)?;
        let left = BiLstm::init(store, "pred.left", d_emb, hidden, true, rng)?;
        let right = BiLstm::init(store, "pred.right", d_emb, hidden, true, rng)?;
        let d_enc = 2 * hidden;
        let attn_w = store.add("pred.attn_w", glorot_uniform(3, 3 * d_enc, rng))?;
        let attn_b = store.add("pred.attn_b", Tensor::zeros(&[3]))?;
        let out_w = store.add("pred.out_w", glorot_uniform(d_emb, d_enc, rng))?;
        let out_b = store.add("pred.out_b", Tensor::zeros(&[d_emb]))?;
        Ok(PredictorParams {
            char_emb,
            chars,
            left,
            right,
            attn_w,
            attn_b,
            out_w,
            out_b,
        })
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.char_emb];
        ids.extend(self.chars.param_ids());
        ids.extend(self.left.param_ids());
        ids.extend(self.right.param_ids());
        ids.extend([self.attn_w, self.attn_b, self.out_w, self.out_b]);
        ids
    }

    pub fn encoding_dim(&self) -> usize {
        self.chars.output_dim()
    }
}

/// Where a context position takes its vector from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WordSource<'a, T> {
    /// Frozen pretrained vector.
    Pretrained(&'a [T]),
    /// Trainable row for a training word missing from the pretrained table.
    VocabRow(usize),
    Bos,
    Eos,
    Unk,
}

/// Resolves tokens to embedding vectors for both the context encoders and
/// the tagger.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingSources<'a, T> {
    pub table: &'a EmbeddingTable<T>,
    /// Vocabulary and `[|vocab|, d_emb]` matrix used when OOV status also
    /// consults training frequencies.
    pub vocab: Option<(&'a Vocabulary, ParamId)>,
    pub bos: ParamId,
    pub eos: ParamId,
    pub unk: ParamId,
}

impl<'a, T: Scalar> EmbeddingSources<'a, T> {
    /// Source for a known token; OOV tokens resolve to the shared UNK vector.
    pub fn resolve(&self, token: &Token) -> WordSource<'a, T> {
        if token.is_oov {
            return WordSource::Unk;
        }
        if let Some(v) = self.table.get(&token.surface) {
            return WordSource::Pretrained(v);
        }
        match self.vocab {
            Some((vocab, _)) if vocab.contains(&token.surface) => {
                WordSource::VocabRow(vocab.id(&token.surface))
            }
            _ => WordSource::Unk,
        }
    }

    pub fn var(&self, g: &mut Graph<T>, src: WordSource<'a, T>) -> Result<Var> {
        Ok(match src {
            WordSource::Pretrained(v) => g.input_vector(v),
            WordSource::VocabRow(id) => {
                let (_, m) = self.vocab.expect("vocab rows need a vocabulary");
                let m = g.param(m);
                g.row(m, id)?
            }
            WordSource::Bos => g.param(self.bos),
            WordSource::Eos => g.param(self.eos),
            WordSource::Unk => g.param(self.unk),
        })
    }
}

/// Context window settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    /// Maximum context words per side.
    pub size: usize,
    /// Pad windows that cross a sentence boundary with BOS/EOS markers.
    /// Without markers a sentence-initial word has an empty left context.
    pub markers: bool,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            size: 7,
            markers: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextView<'a, T> {
    /// Preceding words in textual order, nearest last.
    pub left: Vec<WordSource<'a, T>>,
    /// Following words in textual order, nearest first.
    pub right: Vec<WordSource<'a, T>>,
    pub char_ids: Vec<usize>,
}

pub fn make_context_view<'a, T: Scalar>(
    sentence: &Sentence,
    position: usize,
    window: Window,
    sources: &EmbeddingSources<'a, T>,
) -> Result<ContextView<'a, T>> {
    let n = sentence.len();
    if position >= n {
        return Err(Error::Index {
            what: "sentence",
            index: position,
            len: n,
        });
    }
    let k = window.size;
    let tokens = &sentence.tokens;

    let start = position.saturating_sub(k);
    let mut left = Vec::with_capacity(k);
    if window.markers && position < k {
        left.push(WordSource::Bos);
    }
    left.extend(tokens[start..position].iter().map(|t| sources.resolve(t)));

    let end = (position + 1 + k).min(n);
    let mut right: Vec<_> = tokens[position + 1..end]
        .iter()
        .map(|t| sources.resolve(t))
        .collect();
    if window.markers && position + 1 + k > n {
        right.push(WordSource::Eos);
    }

    let char_ids = tokens[position].char_ids.clone();
    if char_ids.is_empty() {
        return Err(Error::Contract(format!(
            "token {:?} has no character ids",
            tokens[position].surface
        )));
    }
    Ok(ContextView {
        left,
        right,
        char_ids,
    })
}

/// Encodings of one view, each of size `2 · hidden`.
#[derive(Clone, Copy, Debug)]
pub struct Encodings {
    pub left: Var,
    pub right: Var,
    pub chars: Var,
}

/// Runs the three encoders. The right context is read farthest-to-nearest so
/// the adjacent word sits next to the final forward state, mirroring the left
/// context.
pub fn encode_word<T: Scalar>(
    g: &mut Graph<T>,
    view: &ContextView<'_, T>,
    p: &PredictorParams,
    sources: &EmbeddingSources<'_, T>,
) -> Result<Encodings> {
    let table = g.param(p.char_emb);
    let char_seq = view
        .char_ids
        .iter()
        .map(|&c| g.row(table, c))
        .collect::<Result<Vec<_>>>()?;
    let chars = bilstm_encode(g, &char_seq, &p.chars)?;

    let left_seq = view
        .left
        .iter()
        .map(|&s| sources.var(g, s))
        .collect::<Result<Vec<_>>>()?;
    let left = bilstm_encode(g, &left_seq, &p.left)?;

    let right_seq = view
        .right
        .iter()
        .rev()
        .map(|&s| sources.var(g, s))
        .collect::<Result<Vec<_>>>()?;
    let right = bilstm_encode(g, &right_seq, &p.right)?;

    Ok(Encodings { left, right, chars })
}

/// `softmax(W_a · [h_chars; h_left; h_right] + b_a)`, ordered (word, left, right).
pub fn attend<T: Scalar>(g: &mut Graph<T>, enc: &Encodings, p: &PredictorParams) -> Result<Var> {
    let joint = g.concat(&[enc.chars, enc.left, enc.right])?;
    let w = g.param(p.attn_w);
    let b = g.param(p.attn_b);
    let logits = linear(g, joint, w, b)?;
    g.softmax(logits)
}

/// `W_o · (a_word·h_chars + a_left·h_left + a_right·h_right) + b_o`.
pub fn combine<T: Scalar>(
    g: &mut Graph<T>,
    enc: &Encodings,
    attention: Var,
    p: &PredictorParams,
) -> Result<Var> {
    let mixed = g.weighted_sum(attention, &[enc.chars, enc.left, enc.right])?;
    let w = g.param(p.out_w);
    let b = g.param(p.out_b);
    linear(g, mixed, w, b)
}

/// Predicted embedding for an OOV token plus the attention node.
#[derive(Clone, Copy, Debug)]
pub struct Prediction {
    pub embedding: Var,
    pub attention: Var,
}

pub fn predict_oov<T: Scalar>(
    g: &mut Graph<T>,
    sentence: &Sentence,
    position: usize,
    window: Window,
    p: &PredictorParams,
    sources: &EmbeddingSources<'_, T>,
) -> Result<Prediction> {
    let token = sentence.tokens.get(position).ok_or(Error::Index {
        what: "sentence",
        index: position,
        len: sentence.len(),
    })?;
    if !token.is_oov {
        return Err(Error::Contract(format!(
            "{:?} is in vocabulary; use its table embedding",
            token.surface
        )));
    }
    let view = make_context_view(sentence, position, window, sources)?;
    let enc = encode_word(g, &view, p, sources)?;
    let attention = attend(g, &enc, p)?;
    let embedding = combine(g, &enc, attention, p)?;
    Ok(Prediction {
        embedding,
        attention,
    })
}
