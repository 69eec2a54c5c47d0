use std::collections::HashMap;

use crate::corpus::{EmbeddingTable, Sentence, Task};
use crate::error::{Error, Result};
use crate::model::{Model, OovMode};
use crate::predictor::AttentionTriple;
use crate::scalar::Scalar;
use crate::tagger::run_sentence;

/// Attention recorded for one OOV occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct OovAttention {
    pub sentence: usize,
    pub position: usize,
    pub gold: String,
    pub triple: AttentionTriple,
}

/// Runs the predictor over every OOV token of `sentences`.
pub fn collect_attention<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentences: &[Sentence],
) -> Result<Vec<OovAttention>> {
    if model.config.oov_mode != OovMode::Predictor {
        return Err(Error::Config(format!(
            "attention analysis needs a predictor-mode model, got {}",
            model.config.oov_mode
        )));
    }
    let mut out = Vec::new();
    for (si, s) in sentences.iter().enumerate() {
        if !s.tokens.iter().any(|t| t.is_oov) {
            continue;
        }
        let run = run_sentence(model, table, s)?;
        for (pi, a) in run.attention.into_iter().enumerate() {
            if let Some(triple) = a {
                out.push(OovAttention {
                    sentence: si,
                    position: pi,
                    gold: model.config.task.gold(&s.tokens[pi]).to_string(),
                    triple,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TagAttentionRow {
    pub tag: String,
    pub count: usize,
    pub word: f64,
    pub left: f64,
    pub right: f64,
}

const NER_ORDER: [&str; 9] = [
    "O", "B-PER", "I-PER", "B-ORG", "I-ORG", "B-LOC", "I-LOC", "B-MISC", "I-MISC",
];

/// Mean attention per gold tag. NER rows follow the conventional entity
/// order (unlisted tags after, by name); POS rows are sorted by descending
/// count, then name.
pub fn attention_by_tag(records: &[OovAttention], task: Task) -> Vec<TagAttentionRow> {
    let mut groups: HashMap<&str, (usize, [f64; 3])> = HashMap::new();
    for r in records {
        let e = groups.entry(&r.gold).or_insert((0, [0.0; 3]));
        e.0 += 1;
        for (acc, v) in e.1.iter_mut().zip(r.triple.as_array()) {
            *acc += v;
        }
    }
    let mut rows: Vec<TagAttentionRow> = groups
        .into_iter()
        .map(|(tag, (count, sums))| {
            let n = count as f64;
            TagAttentionRow {
                tag: tag.to_string(),
                count,
                word: sums[0] / n,
                left: sums[1] / n,
                right: sums[2] / n,
            }
        })
        .collect();
    match task {
        Task::Ner => {
            let rank = |t: &str| NER_ORDER.iter().position(|x| *x == t).unwrap_or(NER_ORDER.len());
            rows.sort_by(|a, b| {
                rank(&a.tag)
                    .cmp(&rank(&b.tag))
                    .then_with(|| a.tag.cmp(&b.tag))
            });
        }
        Task::Pos => rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tag.cmp(&b.tag))),
    }
    rows
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub triple: AttentionTriple,
    pub sentence: usize,
    pub position: usize,
    /// Up to `k_show` words each side, `<BOS>`/`<EOS>` when the window
    /// reaches a boundary, target written as `*word*`.
    pub excerpt: String,
}

pub fn excerpt(sentence: &Sentence, position: usize, k_show: usize) -> String {
    let n = sentence.len();
    let start = position.saturating_sub(k_show);
    let end = (position + k_show + 1).min(n);
    let mut parts: Vec<String> = Vec::new();
    if position < k_show {
        parts.push("<BOS>".into());
    }
    for (i, t) in sentence.tokens[start..end].iter().enumerate() {
        if start + i == position {
            parts.push(format!("*{}*", t.surface));
        } else {
            parts.push(t.surface.clone());
        }
    }
    if position + k_show >= n {
        parts.push("<EOS>".into());
    }
    parts.join(" ")
}

/// One row per OOV occurrence of `word` (case-insensitive).
pub fn attention_trace(
    word: &str,
    sentences: &[Sentence],
    records: &[OovAttention],
    k_show: usize,
) -> Vec<TraceRow> {
    let target = word.to_lowercase();
    records
        .iter()
        .filter(|r| sentences[r.sentence].tokens[r.position].surface.to_lowercase() == target)
        .map(|r| TraceRow {
            triple: r.triple,
            sentence: r.sentence,
            position: r.position,
            excerpt: excerpt(&sentences[r.sentence], r.position, k_show),
        })
        .collect()
}
