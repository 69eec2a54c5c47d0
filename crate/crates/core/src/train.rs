//! Joint training of the tagger and the OOV predictor.

use crate::corpus::{shuffle_order, EmbeddingTable, Sentence};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::graph::{Gradients, Graph};
use crate::model::{rng_stream, Model, STREAM_SHUFFLE};
use crate::optim::Optimizer;
use crate::scalar::Scalar;
use crate::tagger::{assemble_embeddings, sentence_loss, tag_scores};

use rand::RngCore;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_metric: f64,
}

impl TrainReport {
    /// Tab-separated `epoch train_loss dev_metric` lines with a header.
    pub fn metrics_log(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tdev_metric\n");
        for r in &self.epochs {
            out.push_str(&format!("{}\t{:.6}\t{:.2}\n", r.epoch, r.train_loss, r.dev_metric));
        }
        out
    }
}

/// Loss and parameter gradients for one sentence.
pub fn sentence_gradients<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentence: &Sentence,
) -> Result<(T, Gradients<T>)> {
    let gold = model.gold_ids(sentence)?;
    let mut g = Graph::new(&model.store);
    let asm = assemble_embeddings(&mut g, sentence, model.config.oov_mode, model, table)?;
    let scores = tag_scores(&mut g, &asm.embeddings, &model.tagger)?;
    let loss = sentence_loss(&mut g, &scores, &gold)?;
    let grads = g.backward(loss)?;
    Ok((g.scalar(loss), grads))
}

/// Mean loss and mean gradient over `sentences`.
pub fn batch_gradients<T: Scalar>(
    model: &Model<T>,
    table: &EmbeddingTable<T>,
    sentences: &[Sentence],
) -> Result<(T, Gradients<T>)> {
    if sentences.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let mut total = Gradients::empty(model.store.len());
    let mut loss = T::zero();
    for s in sentences {
        let (l, g) = sentence_gradients(model, table, s)?;
        loss += l;
        total.accumulate(&g);
    }
    let inv = T::one() / T::of(sentences.len() as f64);
    total.scale(inv);
    Ok((loss * inv, total))
}

/// Per-epoch shuffled, sentence-at-a-time training with best-dev
/// checkpointing and early stopping. On return `model` holds the parameters
/// of the best dev epoch. An empty `dev` set scores on `train` instead.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_set: &[Sentence],
    dev_set: &[Sentence],
    table: &EmbeddingTable<T>,
) -> Result<TrainReport> {
    model.config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let dev = if dev_set.is_empty() { train_set } else { dev_set };
    let mut optimizer = Optimizer::new(model.config.optimizer, model.store.len());
    let mut shuffle_rng = rng_stream(model.config.seed, STREAM_SHUFFLE);

    let mut records = Vec::new();
    let mut best: Option<(usize, f64, crate::params::ParamStore<T>)> = None;
    let mut stale = 0usize;

    for epoch in 1..=model.config.epochs {
        let order = shuffle_order(train_set.len(), shuffle_rng.next_u64());
        let mut epoch_loss = 0.0;
        for &i in &order {
            let diverged = Error::Diverged { epoch, sentence: i };
            let (loss, grads) = match sentence_gradients(model, table, &train_set[i]) {
                Ok(r) => r,
                Err(Error::NonFinite { .. }) => return Err(diverged),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(diverged);
            }
            epoch_loss += loss.as_f64();
            optimizer.step(&mut model.store, grads)?;
        }
        let metric = evaluate(model, table, dev)?.metric;
        records.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            dev_metric: metric,
        });

        let improved = best.as_ref().is_none_or(|(_, m, _)| metric > *m);
        if improved {
            best = Some((epoch, metric, model.store.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= model.config.patience {
                break;
            }
        }
    }

    let (best_epoch, best_metric, store) = best.expect("at least one epoch ran");
    model.store = store;
    Ok(TrainReport {
        epochs: records,
        best_epoch,
        best_metric,
    })
}
