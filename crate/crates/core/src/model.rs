//! The full trainable model: tagger, optional OOV predictor, boundary and
//! unknown-word vectors, and the vocabularies they are indexed by.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    assign_char_ids, build_vocab, mark_oov, CharVocab, EmbeddingTable, Sentence, Task, Vocabulary,
};
use crate::error::{Error, Result};
use crate::optim::OptimizerConfig;
use crate::params::{uniform, ParamId, ParamStore};
use crate::predictor::{EmbeddingSources, PredictorParams, Window};
use crate::scalar::Scalar;
use crate::tagger::TaggerParams;

/// How the tagger obtains vectors for OOV tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OovMode {
    /// Predicted from characters and context, trained jointly.
    Predictor,
    /// One fixed random vector per word type.
    Random,
    /// One shared trainable vector.
    Unk,
}

impl std::str::FromStr for OovMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predictor" => Ok(OovMode::Predictor),
            "random" => Ok(OovMode::Random),
            "unk" => Ok(OovMode::Unk),
            other => Err(Error::Config(format!("unknown oov mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for OovMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OovMode::Predictor => "predictor",
            OovMode::Random => "random",
            OovMode::Unk => "unk",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub d_char: usize,
    /// Per-direction hidden size shared by the three predictor encoders.
    pub enc_hidden: usize,
    /// Per-direction hidden size of the sentence tagger.
    pub tag_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            d_char: 25,
            enc_hidden: 50,
            tag_hidden: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub task: Task,
    pub oov_mode: OovMode,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub window: Window,
    pub optimizer: OptimizerConfig,
    pub dims: ModelDims,
    /// When set, training words seen this often are not OOV even if the
    /// pretrained table lacks them; they get trainable vectors.
    pub vocab_min_count: Option<usize>,
    pub lowercase_fallback: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Ner,
            oov_mode: OovMode::Predictor,
            epochs: 50,
            patience: 10,
            seed: 1,
            window: Window::default(),
            optimizer: OptimizerConfig::default(),
            dims: ModelDims::default(),
            vocab_min_count: None,
            lowercase_fallback: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        let d = self.dims;
        if d.d_char == 0 || d.enc_hidden == 0 || d.tag_hidden == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.optimizer.lr <= 0.0 || !self.optimizer.lr.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

// Independent RNG streams so each component's initial values do not depend
// on which other components exist.
const STREAM_TAGGER: u64 = 1;
const STREAM_SPECIALS: u64 = 2;
const STREAM_PREDICTOR: u64 = 3;
const STREAM_VOCAB: u64 = 4;
pub(crate) const STREAM_SHUFFLE: u64 = 5;

pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub config: TrainConfig,
    pub store: ParamStore<T>,
    pub tagger: TaggerParams,
    pub bos: ParamId,
    pub eos: ParamId,
    pub unk: ParamId,
    pub vocab_emb: Option<ParamId>,
    pub predictor: Option<PredictorParams>,
    pub vocab: Vocabulary,
    pub chars: CharVocab,
    pub tags: Vec<String>,
    pub d_emb: usize,
}

impl<T: Scalar> Model<T> {
    pub fn new(
        config: TrainConfig,
        vocab: Vocabulary,
        chars: CharVocab,
        tags: Vec<String>,
        d_emb: usize,
    ) -> Result<Self> {
        config.validate()?;
        if tags.is_empty() {
            return Err(Error::Config("empty tag set".into()));
        }
        if d_emb == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let seed = config.seed;
        let dims = config.dims;
        let mut store = ParamStore::new();

        let tagger = TaggerParams::init(
            &mut store,
            d_emb,
            dims.tag_hidden,
            tags.len(),
            &mut rng_stream(seed, STREAM_TAGGER),
        )?;

        let mut rng = rng_stream(seed, STREAM_SPECIALS);
        let bos = store.add("emb.bos", uniform(&[d_emb], 0.25, &mut rng))?;
        let eos = store.add("emb.eos", uniform(&[d_emb], 0.25, &mut rng))?;
        let unk = store.add("emb.unk", uniform(&[d_emb], 0.25, &mut rng))?;

        let vocab_emb = match config.vocab_min_count {
            Some(_) => Some(store.add(
                "emb.vocab",
                uniform(&[vocab.len(), d_emb], 0.25, &mut rng_stream(seed, STREAM_VOCAB)),
            )?),
            None => None,
        };

        let predictor = match config.oov_mode {
            OovMode::Predictor => Some(PredictorParams::init(
                &mut store,
                chars.len(),
                dims.d_char,
                dims.enc_hidden,
                d_emb,
                &mut rng_stream(seed, STREAM_PREDICTOR),
            )?),
            _ => None,
        };

        Ok(Model {
            config,
            store,
            tagger,
            bos,
            eos,
            unk,
            vocab_emb,
            predictor,
            vocab,
            chars,
            tags,
            d_emb,
        })
    }

    /// Builds vocabularies and the tag set from `train`, then initialises.
    pub fn from_corpus(config: TrainConfig, train: &[Sentence], table: &EmbeddingTable<T>) -> Result<Self> {
        let (vocab, chars) = build_vocab(train, config.vocab_min_count.unwrap_or(1));
        let mut tags: Vec<String> = Vec::new();
        for t in train.iter().flat_map(|s| &s.tokens) {
            let tag = config.task.gold(t);
            if !tags.iter().any(|x| x == tag) {
                tags.push(tag.to_string());
            }
        }
        Self::new(config, vocab, chars, tags, table.dim())
    }

    pub fn sources<'a>(&'a self, table: &'a EmbeddingTable<T>) -> EmbeddingSources<'a, T> {
        EmbeddingSources {
            table,
            vocab: self.vocab_emb.map(|id| (&self.vocab, id)),
            bos: self.bos,
            eos: self.eos,
            unk: self.unk,
        }
    }

    /// Sets OOV flags and character ids according to this model.
    pub fn prepare(&self, sentences: &mut [Sentence], table: &EmbeddingTable<T>) {
        let vocab = self.config.vocab_min_count.map(|_| &self.vocab);
        mark_oov(sentences, table, vocab);
        assign_char_ids(sentences, &self.chars);
    }

    pub fn tag_id(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    pub fn gold_ids(&self, sentence: &Sentence) -> Result<Vec<usize>> {
        sentence
            .tokens
            .iter()
            .map(|t| {
                let tag = self.config.task.gold(t);
                self.tag_id(tag)
                    .ok_or_else(|| Error::Contract(format!("tag {tag:?} is not in the model's tag set")))
            })
            .collect()
    }

    pub fn predictor_param_ids(&self) -> Vec<ParamId> {
        self.predictor
            .as_ref()
            .map(PredictorParams::param_ids)
            .unwrap_or_default()
    }
}
