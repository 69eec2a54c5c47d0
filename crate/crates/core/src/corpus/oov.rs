use super::{EmbeddingTable, Sentence, Vocabulary};
use crate::scalar::Scalar;

/// A token is OOV iff the table does not know it (after its casing rule) and,
/// when `train_vocab` is given, the vocabulary does not contain it either.
/// The vocabulary's own `min_count` decides which training words it holds.
pub fn mark_oov<T: Scalar>(
    sentences: &mut [Sentence],
    table: &EmbeddingTable<T>,
    train_vocab: Option<&Vocabulary>,
) {
    for s in sentences {
        for t in &mut s.tokens {
            let known = table.is_known(&t.surface)
                || train_vocab.is_some_and(|v| v.contains(&t.surface));
            t.is_oov = !known;
        }
    }
}

pub fn count_oov(sentences: &[Sentence]) -> usize {
    sentences
        .iter()
        .flat_map(|s| &s.tokens)
        .filter(|t| t.is_oov)
        .count()
}
