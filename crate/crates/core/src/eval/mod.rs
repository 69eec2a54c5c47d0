//! Tagging metrics and attention reports.

mod attention;
mod metrics;
mod report;

pub use attention::{
    attention_by_tag, attention_trace, collect_attention, OovAttention, TagAttentionRow, TraceRow,
};
pub use metrics::{extract_spans, span_f1, token_accuracy, Prf, Span};
pub use report::{
    by_tag_csv, by_tag_table, format_metric, metrics_csv, round2, round2_simplex, trace_csv,
    trace_table,
};

use crate::corpus::{EmbeddingTable, Sentence, Task};
use crate::error::Result;
use crate::model::Model;
use crate::scalar::Scalar;
use crate::tagger::predict_tags;

/// Task metric in percent: span F1 for NER, token accuracy for POS.
pub fn task_metric(task: Task, pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<f64> {
    match task {
        Task::Ner => Ok(span_f1(pred, gold)?.f1),
        Task::Pos => token_accuracy(pred, gold),
    }
}

pub fn gold_tags(task: Task, sentences: &[Sentence]) -> Vec<Vec<String>> {
    sentences
        .iter()
        .map(|s| s.tokens.iter().map(|t| task.gold(t).to_string()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<Vec<String>>,
    pub metric: f64,
    pub spans: Option<Prf>,
}

/// Tags every sentence with `model` and scores against the gold column.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentences: &[Sentence],
) -> Result<Evaluation> {
    let predictions = sentences
        .iter()
        .map(|s| predict_tags(model, table, s))
        .collect::<Result<Vec<_>>>()?;
    let gold = gold_tags(model.config.task, sentences);
    let spans = match model.config.task {
        Task::Ner => Some(span_f1(&predictions, &gold)?),
        Task::Pos => None,
    };
    let metric = task_metric(model.config.task, &predictions, &gold)?;
    Ok(Evaluation {
        predictions,
        metric,
        spans,
    })
}
