#![allow(dead_code)]

use comick::corpus::{EmbeddingTable, Sentence, Token};
use comick::model::{Model, ModelDims, OovMode, TrainConfig};
use comick::optim::OptimizerConfig;
use comick::{Task, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn table(words: &[&str], dim: usize, seed: u64) -> EmbeddingTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EmbeddingTable::new(dim);
    for w in words {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        t.insert(w, &v).unwrap();
    }
    t
}

/// `(surface, pos)` pairs; the NER column mirrors POS.
pub fn sentence(words: &[(&str, &str)]) -> Sentence {
    Sentence::new(words.iter().map(|(w, t)| Token::new(*w, *t, *t)).collect())
}

pub fn tiny_config(mode: OovMode, seed: u64) -> TrainConfig {
    TrainConfig {
        task: Task::Pos,
        oov_mode: mode,
        epochs: 5,
        patience: 100,
        seed,
        window: Window { size: 2, markers: true },
        optimizer: OptimizerConfig::default(),
        dims: ModelDims {
            d_char: 3,
            enc_hidden: 2,
            tag_hidden: 3,
        },
        ..TrainConfig::default()
    }
}

/// Three tokens with "zorp" missing from the table.
pub fn toy() -> (Vec<Sentence>, EmbeddingTable<f64>) {
    let t = table(&["the", "cat", "sat", "a"], 4, 7);
    let s = vec![
        sentence(&[("the", "DT"), ("zorp", "NN"), ("sat", "VB")]),
        sentence(&[("a", "DT"), ("cat", "NN"), ("sat", "VB")]),
    ];
    (s, t)
}

pub fn prepared(cfg: TrainConfig, sentences: &mut [Sentence], t: &EmbeddingTable<f64>) -> Model<f64> {
    let m = Model::from_corpus(cfg, sentences, t).unwrap();
    m.prepare(sentences, t);
    m
}

/// Randomises every parameter so tests do not depend on zero-initialised
/// biases or sentinels.
pub fn jitter(model: &mut Model<f64>, seed: u64, scale: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        for v in model.store.get_mut(id).data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
}
