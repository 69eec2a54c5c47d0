//! Corpus ingestion: CoNLL 2003 files, tag schemes, pretrained vectors,
//! vocabularies and OOV flags.

mod conll;
mod embeddings;
mod oov;
mod tags;
mod vocab;

pub use conll::{parse_conll, read_conll, serialize_conll};
pub use embeddings::{load_embeddings, read_embeddings, serialize_embeddings, EmbeddingTable};
pub use oov::{count_oov, mark_oov};
pub use tags::{iob1_to_bio, is_well_formed_bio, parse_tag, Tag};
pub use vocab::{assign_char_ids, build_vocab, CharVocab, Vocabulary};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: String,
    /// BIO-normalised entity tag.
    pub ner: String,
    pub is_oov: bool,
    /// Filled by [`assign_char_ids`]; empty until then.
    pub char_ids: Vec<usize>,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>, ner: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            pos: pos.into(),
            ner: ner.into(),
            is_oov: false,
            char_ids: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// Labelling task; selects which column supplies gold tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Ner,
    Pos,
}

impl Task {
    pub fn gold<'a>(&self, token: &'a Token) -> &'a str {
        match self {
            Task::Ner => &token.ner,
            Task::Pos => &token.pos,
        }
    }
}

impl std::str::FromStr for Task {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "ner" => Ok(Task::Ner),
            "pos" => Ok(Task::Pos),
            other => Err(crate::Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Ner => "ner",
            Task::Pos => "pos",
        })
    }
}

/// Deterministic permutation of `0..n` drawn from `seed`.
pub fn shuffle_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Sentences in the epoch order given by [`shuffle_order`].
pub fn shuffle_batches(sentences: &[Sentence], seed: u64) -> Vec<&Sentence> {
    shuffle_order(sentences.len(), seed)
        .into_iter()
        .map(|i| &sentences[i])
        .collect()
}
