//! Small generated corpora with known structure, used to exercise training
//! end to end without external data.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{EmbeddingTable, Sentence, Token};
use crate::model::rng_stream;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SyntheticData<T> {
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub table: EmbeddingTable<T>,
    /// Surfaces deliberately left out of `table`.
    pub oov_types: Vec<String>,
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn random_word<R: Rng>(rng: &mut R, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char)
        .collect()
}

fn table_for<T: Scalar, R: Rng>(words: &[String], dim: usize, rng: &mut R) -> EmbeddingTable<T> {
    let mut t = EmbeddingTable::new(dim);
    for w in words {
        let v: Vec<T> = (0..dim).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        t.insert(w, &v).expect("dimension matches");
    }
    t
}

/// `tag` in the POS column; the NER column marks every non-`O` token as a
/// one-word entity `B-<tag>`, so either task can train and the corpus
/// survives a CoNLL round trip.
fn token(surface: &str, tag: &str) -> Token {
    let ner = if tag == "O" { "O".to_string() } else { format!("B-{tag}") };
    Token::new(surface, tag, ner)
}

/// `n_sentences` sentences over a 60-type vocabulary, 12 types of which (20%)
/// are absent from the pretrained table. Each type has one fixed tag, so a
/// model can fit the training set exactly.
pub fn overfit_corpus<T: Scalar>(seed: u64, n_sentences: usize, dim: usize) -> SyntheticData<T> {
    const TAGS: [&str; 5] = ["NN", "VB", "DT", "JJ", "CD"];
    let mut rng = rng_stream(seed, 100);
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    while words.len() < 60 {
        let w = random_word(&mut rng, 3, 7);
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    let tags: Vec<&str> = (0..60).map(|_| TAGS[rng.gen_range(0..TAGS.len())]).collect();
    let (known, oov) = words.split_at(48);
    let table = table_for(known, dim, &mut rng);

    let sentences = (0..n_sentences)
        .map(|_| {
            let len = rng.gen_range(5..=10);
            Sentence::new(
                (0..len)
                    .map(|_| {
                        let i = rng.gen_range(0..60);
                        token(&words[i], tags[i])
                    })
                    .collect(),
            )
        })
        .collect();
    SyntheticData {
        train: sentences,
        test: Vec::new(),
        table,
        oov_types: oov.to_vec(),
    }
}

/// What determines the tag of an OOV token in [`keyed_corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cue {
    /// The immediately preceding word; the OOV surface is random.
    PrecedingWord,
    /// A suffix of the OOV surface; surrounding words are random.
    Suffix,
}

pub const KEYED_CLASSES: [&str; 3] = ["A", "B", "C"];
const TRIGGERS: [&str; 3] = ["mister", "inside", "atop"];
const SUFFIXES: [&str; 3] = ["ing", "ed", "ly"];

/// Size of the shared surface pool for [`Cue::PrecedingWord`] OOV tokens.
const CONTEXT_POOL: usize = 8;

fn oov_surface<R: Rng>(cue: Cue, class: usize, pool: &[String], rng: &mut R) -> String {
    match cue {
        Cue::PrecedingWord => pool.choose(rng).expect("non-empty pool").clone(),
        Cue::Suffix => format!("{}{}", random_word(rng, 3, 6), SUFFIXES[class]),
    }
}

/// Sentences of random known filler words (tag `O`) with one or two OOV
/// tokens whose class (`A`/`B`/`C`) is fixed by `cue`. Test OOV surfaces
/// never occur in training.
///
/// With [`Cue::PrecedingWord`] each OOV token follows a trigger word naming
/// its class, and its surface comes from a small pool shared by all classes,
/// so the characters carry no class information. With [`Cue::Suffix`] it
/// follows a filler and is a fresh random stem plus a class-specific suffix.
pub fn keyed_corpus<T: Scalar>(
    cue: Cue,
    seed: u64,
    n_train: usize,
    n_test: usize,
    dim: usize,
) -> SyntheticData<T> {
    let mut rng = rng_stream(seed, 200);
    let fillers: Vec<String> = (0..20).map(|i| format!("f{i}")).collect();
    let mut known: Vec<String> = fillers.clone();
    if cue == Cue::PrecedingWord {
        known.extend(TRIGGERS.iter().map(|s| s.to_string()));
    }
    let table = table_for(&known, dim, &mut rng);

    let mut pools: Vec<Vec<String>> = Vec::new();
    for _ in 0..2 {
        let mut pool = Vec::new();
        while pool.len() < CONTEXT_POOL {
            let w = random_word(&mut rng, 4, 8);
            if !known.contains(&w) && !pools.iter().flatten().any(|p| *p == w) && !pool.contains(&w) {
                pool.push(w);
            }
        }
        pools.push(pool);
    }

    let mut used: HashSet<String> = HashSet::new();
    let mut oov_types = Vec::new();
    let mut make = |rng: &mut rand_chacha::ChaCha8Rng, used: &mut HashSet<String>, fresh_only: bool| {
        let pool = &pools[usize::from(fresh_only)];
        let len = rng.gen_range(6..=10);
        let mut toks: Vec<Token> = (0..len)
            .map(|_| token(fillers.choose(rng).expect("non-empty"), "O"))
            .collect();
        let n_oov = rng.gen_range(1..=2);
        let mut slots: Vec<usize> = (1..len).collect();
        slots.shuffle(rng);
        let mut placed: Vec<usize> = Vec::new();
        for &slot in &slots {
            if placed.len() == n_oov {
                break;
            }
            if placed.iter().any(|&p| p.abs_diff(slot) < 2) {
                continue;
            }
            let class = rng.gen_range(0..KEYED_CLASSES.len());
            let surface = loop {
                let s = oov_surface(cue, class, pool, rng);
                if !(fresh_only && used.contains(&s)) && !known.contains(&s) {
                    break s;
                }
            };
            if !fresh_only {
                used.insert(surface.clone());
            }
            oov_types.push(surface.clone());
            toks[slot] = token(&surface, KEYED_CLASSES[class]);
            if cue == Cue::PrecedingWord {
                toks[slot - 1] = token(TRIGGERS[class], "O");
            }
            placed.push(slot);
        }
        Sentence::new(toks)
    };
    let train: Vec<Sentence> = (0..n_train).map(|_| make(&mut rng, &mut used, false)).collect();
    let test: Vec<Sentence> = (0..n_test).map(|_| make(&mut rng, &mut used, true)).collect();
    oov_types.sort();
    oov_types.dedup();
    SyntheticData {
        train,
        test,
        table,
        oov_types,
    }
}
