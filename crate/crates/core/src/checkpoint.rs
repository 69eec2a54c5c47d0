//! Versioned text checkpoint holding the training configuration,
//! vocabularies, tag set and every named parameter tensor.
//!
//! ```text
//! COMICK1
//! [config] <n>        key=value lines
//! [meta] <n>          key=value lines, caller-defined
//! [tags] <n>          one tag per line
//! [vocab] <n>         one word per line, id order
//! [chars] <n>         one hex code point per line, id order
//! [params] <n>        per parameter: "<name> <d1>x<d2>..." then one line of values
//! ```
//!
//! Values are written in shortest round-trip form, so save → load → save is
//! byte-identical.

use std::collections::BTreeMap;

use crate::corpus::{CharVocab, Task, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Model, ModelDims, OovMode, TrainConfig};
use crate::optim::{OptimizerConfig, OptimizerKind};
use crate::predictor::Window;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MAGIC: &str = "COMICK1";

fn config_pairs(c: &TrainConfig, d_emb: usize) -> Vec<(&'static str, String)> {
    let opt = &c.optimizer;
    vec![
        ("task", c.task.to_string()),
        ("oov_mode", c.oov_mode.to_string()),
        ("epochs", c.epochs.to_string()),
        ("patience", c.patience.to_string()),
        ("seed", c.seed.to_string()),
        ("kctx", c.window.size.to_string()),
        ("markers", c.window.markers.to_string()),
        ("optimizer", opt.kind.to_string()),
        ("lr", format!("{:?}", opt.lr)),
        ("beta1", format!("{:?}", opt.beta1)),
        ("beta2", format!("{:?}", opt.beta2)),
        ("adam_eps", format!("{:?}", opt.epsilon)),
        ("clip", opt.clip.map_or("none".into(), |c| format!("{c:?}"))),
        ("d_char", c.dims.d_char.to_string()),
        ("enc_hidden", c.dims.enc_hidden.to_string()),
        ("tag_hidden", c.dims.tag_hidden.to_string()),
        (
            "vocab_min_count",
            c.vocab_min_count.map_or("none".into(), |n| n.to_string()),
        ),
        ("lowercase", c.lowercase_fallback.to_string()),
        ("d_emb", d_emb.to_string()),
    ]
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, meta: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');

    let cfg = config_pairs(&model.config, model.d_emb);
    out.push_str(&format!("[config] {}\n", cfg.len()));
    for (k, v) in cfg {
        out.push_str(&format!("{k}={v}\n"));
    }
    out.push_str(&format!("[meta] {}\n", meta.len()));
    for (k, v) in meta {
        out.push_str(&format!("{k}={v}\n"));
    }
    out.push_str(&format!("[tags] {}\n", model.tags.len()));
    for t in &model.tags {
        out.push_str(t);
        out.push('\n');
    }
    out.push_str(&format!("[vocab] {}\n", model.vocab.len()));
    for w in model.vocab.words() {
        out.push_str(w);
        out.push('\n');
    }
    out.push_str(&format!("[chars] {}\n", model.chars.len()));
    for c in model.chars.chars() {
        out.push_str(&format!("{:x}\n", *c as u32));
    }
    out.push_str(&format!("[params] {}\n", model.store.len()));
    for (_, p) in model.store.iter() {
        let shape: Vec<String> = p.value.shape().iter().map(usize::to_string).collect();
        out.push_str(&format!("{} {}\n", p.name, shape.join("x")));
        let vals: Vec<String> = p
            .value
            .data()
            .iter()
            .map(|v| format!("{:?}", v.as_f64()))
            .collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            line: self.last,
            msg: msg.into(),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let l = self.next()?;
        let rest = l
            .strip_prefix(&format!("[{name}] "))
            .ok_or_else(|| self.err(format!("expected section [{name}]")))?;
        rest.parse().map_err(|_| self.err("bad section count"))
    }

    fn pairs(&mut self, name: &str) -> Result<BTreeMap<String, String>> {
        let n = self.section(name)?;
        let mut out = BTreeMap::new();
        for _ in 0..n {
            let l = self.next()?;
            let (k, v) = l.split_once('=').ok_or_else(|| self.err("expected key=value"))?;
            out.insert(k.to_string(), v.to_string());
        }
        Ok(out)
    }
}

fn parse_config(map: &BTreeMap<String, String>) -> Result<(TrainConfig, usize)> {
    let get = |k: &str| {
        map.get(k)
            .ok_or_else(|| Error::Config(format!("checkpoint config lacks {k}")))
    };
    fn num<N: std::str::FromStr>(k: &str, v: &str) -> Result<N> {
        v.parse()
            .map_err(|_| Error::Config(format!("bad value for {k}: {v:?}")))
    }
    let opt_num = |k: &str| -> Result<Option<f64>> {
        let v = get(k)?;
        if v == "none" {
            Ok(None)
        } else {
            num(k, v).map(Some)
        }
    };
    let config = TrainConfig {
        task: get("task")?.parse::<Task>()?,
        oov_mode: get("oov_mode")?.parse::<OovMode>()?,
        epochs: num("epochs", get("epochs")?)?,
        patience: num("patience", get("patience")?)?,
        seed: num("seed", get("seed")?)?,
        window: Window {
            size: num("kctx", get("kctx")?)?,
            markers: num("markers", get("markers")?)?,
        },
        optimizer: OptimizerConfig {
            kind: get("optimizer")?.parse::<OptimizerKind>()?,
            lr: num("lr", get("lr")?)?,
            beta1: num("beta1", get("beta1")?)?,
            beta2: num("beta2", get("beta2")?)?,
            epsilon: num("adam_eps", get("adam_eps")?)?,
            clip: opt_num("clip")?,
        },
        dims: ModelDims {
            d_char: num("d_char", get("d_char")?)?,
            enc_hidden: num("enc_hidden", get("enc_hidden")?)?,
            tag_hidden: num("tag_hidden", get("tag_hidden")?)?,
        },
        vocab_min_count: opt_num("vocab_min_count")?.map(|v| v as usize),
        lowercase_fallback: num("lowercase", get("lowercase")?)?,
    };
    let d_emb = num("d_emb", get("d_emb")?)?;
    Ok((config, d_emb))
}

/// Parses a checkpoint produced by [`save_checkpoint`]; returns the model
/// and the caller metadata.
pub fn load_checkpoint<T: Scalar>(text: &str) -> Result<(Model<T>, BTreeMap<String, String>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    if lines.next().ok() != Some(MAGIC) {
        return Err(Error::Format {
            line: 1,
            msg: format!("not a checkpoint: missing {MAGIC} header"),
        });
    }
    let (config, d_emb) = parse_config(&lines.pairs("config")?)?;
    let meta = lines.pairs("meta")?;

    let n = lines.section("tags")?;
    let tags = (0..n)
        .map(|_| lines.next().map(str::to_string))
        .collect::<Result<Vec<_>>>()?;

    let n = lines.section("vocab")?;
    let words = (0..n)
        .map(|_| lines.next().map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::from_words(words, config.vocab_min_count.unwrap_or(1))
        .ok_or_else(|| lines.err("malformed vocabulary"))?;

    let n = lines.section("chars")?;
    let mut chars = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next()?;
        let c = u32::from_str_radix(l, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| lines.err("bad character code"))?;
        chars.push(c);
    }
    let chars = CharVocab::from_chars(&chars);

    let mut model = Model::<T>::new(config, vocab, chars, tags, d_emb)?;

    let n = lines.section("params")?;
    if n != model.store.len() {
        return Err(lines.err(format!(
            "checkpoint has {n} parameters, model expects {}",
            model.store.len()
        )));
    }
    for _ in 0..n {
        let head = lines.next()?;
        let (name, shape) = head.split_once(' ').ok_or_else(|| lines.err("bad parameter header"))?;
        let shape: Vec<usize> = if shape.is_empty() {
            Vec::new()
        } else {
            shape
                .split('x')
                .map(|d| d.parse().map_err(|_| lines.err("bad shape")))
                .collect::<Result<_>>()?
        };
        let id = model
            .store
            .id(name)
            .ok_or_else(|| lines.err(format!("unknown parameter {name}")))?;
        if model.store.get(id).shape() != shape.as_slice() {
            return Err(Error::Shape {
                op: "checkpoint load",
                left: shape,
                right: model.store.get(id).shape().to_vec(),
            });
        }
        let body = lines.next()?;
        let data = body
            .split_whitespace()
            .map(|v| v.parse::<f64>().map(T::of).map_err(|_| lines.err("bad value")))
            .collect::<Result<Vec<T>>>()?;
        *model.store.get_mut(id) =
            Tensor::new(shape, data).map_err(|_| lines.err(format!("wrong value count for {name}")))?;
    }
    Ok((model, meta))
}
