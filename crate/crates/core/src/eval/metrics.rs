use std::collections::HashSet;

use crate::corpus::{parse_tag, Tag};
use crate::error::{Error, Result};

/// Entity span over inclusive token indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub kind: String,
    pub start: usize,
    pub end: usize,
}

/// Maximal `B-X I-X*` runs. An `I-X` that cannot continue the open span is
/// read as `B-X`, so IOB1 input yields the same spans as its BIO rewrite.
pub fn extract_spans<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Span>> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, raw) in tags.iter().enumerate() {
        let raw = raw.as_ref();
        let tag = parse_tag(raw).ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("malformed tag {raw:?}"),
        })?;
        match tag {
            Tag::Outside => spans.extend(open.take()),
            Tag::Inside(kind) if open.as_ref().is_some_and(|s| s.kind == kind) => {
                open.as_mut().expect("checked").end = i;
            }
            Tag::Begin(kind) | Tag::Inside(kind) => {
                spans.extend(open.take());
                open = Some(Span {
                    kind: kind.to_string(),
                    start: i,
                    end: i,
                });
            }
        }
    }
    spans.extend(open);
    Ok(spans)
}

/// Precision, recall and F1, in percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn check_aligned<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::Contract(format!(
            "{} predicted sentences vs {} gold",
            pred.len(),
            gold.len()
        )));
    }
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::Contract(format!(
                "sentence {i}: {} predicted tags vs {} gold",
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Micro-averaged exact-match span scores over a corpus.
///
/// With no predicted spans precision is 100 if there are also no gold spans
/// and 0 otherwise; recall mirrors this for an empty gold set. F1 is 0 when
/// precision and recall are both 0.
pub fn span_f1<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<Prf> {
    check_aligned(pred, gold)?;
    let (mut n_pred, mut n_gold, mut n_hit) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let ps = extract_spans(p)?;
        let gs: HashSet<Span> = extract_spans(g)?.into_iter().collect();
        n_pred += ps.len();
        n_gold += gs.len();
        n_hit += ps.iter().filter(|s| gs.contains(*s)).count();
    }
    let ratio = |num: usize, den: usize, other: usize| {
        if den == 0 {
            if other == 0 {
                100.0
            } else {
                0.0
            }
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    let precision = ratio(n_hit, n_pred, n_gold);
    let recall = ratio(n_hit, n_gold, n_pred);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf {
        precision,
        recall,
        f1,
    })
}

/// Percentage of tokens whose predicted tag equals the gold tag.
pub fn token_accuracy<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<f64> {
    check_aligned(pred, gold)?;
    let total: usize = gold.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Contract("accuracy over zero tokens".into()));
    }
    let hits = pred
        .iter()
        .zip(gold)
        .flat_map(|(p, g)| p.iter().zip(g))
        .filter(|(a, b)| a.as_ref() == b.as_ref())
        .count();
    Ok(100.0 * hits as f64 / total as f64)
}
