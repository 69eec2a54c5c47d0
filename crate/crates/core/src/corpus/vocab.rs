use std::collections::HashMap;

use super::Sentence;

/// Word vocabulary with four reserved ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
    pub min_count: usize,
}

impl Vocabulary {
    pub const UNK: usize = 0;
    pub const BOS: usize = 1;
    pub const EOS: usize = 2;
    pub const PAD: usize = 3;
    pub const SPECIALS: [&'static str; 4] = ["<UNK>", "<BOS>", "<EOS>", "<PAD>"];

    pub fn with_specials(min_count: usize) -> Self {
        let mut v = Vocabulary {
            index: HashMap::new(),
            words: Vec::new(),
            min_count,
        };
        for s in Self::SPECIALS {
            v.push(s);
        }
        v
    }

    /// Rebuilds a vocabulary from its id-ordered word list.
    pub fn from_words(words: Vec<String>, min_count: usize) -> Option<Self> {
        if words.len() < 4 || words[..4] != Self::SPECIALS {
            return None;
        }
        let mut v = Vocabulary {
            index: HashMap::new(),
            words: Vec::new(),
            min_count,
        };
        for w in words {
            if v.index.contains_key(&w) {
                return None;
            }
            v.push(&w);
        }
        Some(v)
    }

    fn push(&mut self, w: &str) -> usize {
        let id = self.words.len();
        self.index.insert(w.to_string(), id);
        self.words.push(w.to_string());
        id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Id of `word`, or [`Vocabulary::UNK`].
    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(Self::UNK)
    }

    /// True for regular (non-special) entries.
    pub fn contains(&self, word: &str) -> bool {
        self.index.get(word).is_some_and(|&i| i >= Self::SPECIALS.len())
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Character vocabulary; id 0 is the unknown character.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    index: HashMap<char, usize>,
    chars: Vec<char>,
}

impl CharVocab {
    pub const UNK: usize = 0;
    const UNK_CHAR: char = '\u{FFFD}';

    pub fn new() -> Self {
        let mut v = CharVocab {
            index: HashMap::new(),
            chars: vec![Self::UNK_CHAR],
        };
        v.index.insert(Self::UNK_CHAR, Self::UNK);
        v
    }

    pub fn from_chars(chars: &[char]) -> Self {
        let mut v = Self::new();
        for &c in chars.iter().skip(1) {
            v.add(c);
        }
        v
    }

    pub fn add(&mut self, c: char) -> usize {
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        let id = self.chars.len();
        self.index.insert(c, id);
        self.chars.push(c);
        id
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNK)
    }

    pub fn ids(&self, word: &str) -> Vec<usize> {
        word.chars().map(|c| self.id(c)).collect()
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

impl Default for CharVocab {
    fn default() -> Self {
        Self::new()
    }
}

/// Word ids for every surface seen at least `min_count` times, in
/// first-occurrence order, plus a character vocabulary over all surfaces.
pub fn build_vocab(sentences: &[Sentence], min_count: usize) -> (Vocabulary, CharVocab) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    let mut chars = CharVocab::new();
    for s in sentences {
        for t in &s.tokens {
            let c = counts.entry(&t.surface).or_insert(0);
            if *c == 0 {
                order.push(&t.surface);
            }
            *c += 1;
            for ch in t.surface.chars() {
                chars.add(ch);
            }
        }
    }
    let mut vocab = Vocabulary::with_specials(min_count);
    for w in order {
        if counts[w] >= min_count && !vocab.index.contains_key(w) {
            vocab.push(w);
        }
    }
    (vocab, chars)
}

/// Fills every token's `char_ids` from `chars`.
pub fn assign_char_ids(sentences: &mut [Sentence], chars: &CharVocab) {
    for s in sentences {
        for t in &mut s.tokens {
            t.char_ids = chars.ids(&t.surface);
        }
    }
}
