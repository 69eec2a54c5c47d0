//! Command-line front end: run configuration and the `train`, `evaluate`,
//! `analyze`, `embed` and `synth` commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use comick::checkpoint::{load_checkpoint, save_checkpoint};
use comick::corpus::{
    count_oov, read_conll, read_embeddings, serialize_conll, serialize_embeddings, EmbeddingTable,
    Sentence, Token,
};
use comick::eval::{
    attention_by_tag, attention_trace, by_tag_csv, by_tag_table, collect_attention, evaluate,
    gold_tags, metrics_csv, round2, round2_simplex, span_f1, token_accuracy, trace_csv, trace_table,
};
use comick::graph::Graph;
use comick::model::Model;
use comick::optim::OptimizerKind;
use comick::predictor::{predict_oov, AttentionTriple};
use comick::synthetic::{keyed_corpus, overfit_corpus, Cue, SyntheticData};
use comick::train::{train, TrainReport};
use comick::{Error, Task, TrainConfig};

pub const SEED_ENV: &str = "COMICK_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Dev,
    #[default]
    Test,
}

/// Everything a command needs: the training configuration plus file paths.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub train_path: Option<PathBuf>,
    pub dev_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    /// Explicit corpus, overriding the split selector.
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Per-epoch log; defaults to the checkpoint path plus `.metrics.tsv`.
    pub metrics: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub split: Split,
    pub word: Option<String>,
    pub k_show: usize,
    /// Keys set by the config file, a flag or the environment.
    pub explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            train_path: None,
            dev_path: None,
            test_path: None,
            corpus: None,
            embeddings: None,
            checkpoint: None,
            metrics: None,
            out: None,
            split: Split::Test,
            word: None,
            k_show: 3,
            explicit: BTreeSet::new(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "task", "oov_mode", "epochs", "patience", "seed", "kctx", "markers", "optimizer", "lr",
    "clip", "d_char", "enc_hidden", "tag_hidden", "vocab_min_count", "lowercase", "train", "dev",
    "test", "corpus", "embeddings", "checkpoint", "metrics", "out", "split", "word", "k_show",
];

const PATH_KEYS: &[&str] = &["train", "dev", "test", "corpus", "embeddings", "checkpoint", "metrics", "out"];

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> comick::Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for `{key}`")))
}

fn optional<V: std::str::FromStr>(key: &str, value: &str) -> comick::Result<Option<V>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Sets one key; unknown keys and unparsable values are config errors
    /// naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> comick::Result<()> {
        let t = &mut self.train;
        match key {
            "task" => t.task = value.parse()?,
            "oov_mode" => t.oov_mode = value.parse()?,
            "epochs" => t.epochs = parse(key, value)?,
            "patience" => t.patience = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "kctx" => t.window.size = parse(key, value)?,
            "markers" => t.window.markers = parse(key, value)?,
            "optimizer" => {
                t.optimizer.kind = match value {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(Error::Config(format!("bad value {value:?} for `{key}`"))),
                }
            }
            "lr" => t.optimizer.lr = parse(key, value)?,
            "clip" => t.optimizer.clip = optional(key, value)?,
            "d_char" => t.dims.d_char = parse(key, value)?,
            "enc_hidden" => t.dims.enc_hidden = parse(key, value)?,
            "tag_hidden" => t.dims.tag_hidden = parse(key, value)?,
            "vocab_min_count" => t.vocab_min_count = optional(key, value)?,
            "lowercase" => t.lowercase_fallback = parse(key, value)?,
            "train" => self.train_path = Some(value.into()),
            "dev" => self.dev_path = Some(value.into()),
            "test" => self.test_path = Some(value.into()),
            "corpus" => self.corpus = Some(value.into()),
            "embeddings" => self.embeddings = Some(value.into()),
            "checkpoint" => self.checkpoint = Some(value.into()),
            "metrics" => self.metrics = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "split" => {
                self.split = Split::from_str(value, true)
                    .map_err(|_| Error::Config(format!("bad value {value:?} for `split`")))?
            }
            "word" => self.word = Some(value.into()),
            "k_show" => self.k_show = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Corpus for evaluation and analysis: `corpus` if set, else the path
    /// of the selected split.
    pub fn eval_corpus(&self) -> Result<&Path> {
        if let Some(p) = &self.corpus {
            return Ok(p);
        }
        let (name, path) = match self.split {
            Split::Train => ("train", &self.train_path),
            Split::Dev => ("dev", &self.dev_path),
            Split::Test => ("test", &self.test_path),
        };
        path.as_deref()
            .ok_or_else(|| anyhow!("no {name} corpus: set `{name}` in the config, or pass --{name} or --corpus"))
    }

    pub fn metrics_path(&self) -> Option<PathBuf> {
        self.metrics.clone().or_else(|| {
            self.checkpoint.as_ref().map(|c| {
                let mut s = c.clone().into_os_string();
                s.push(".metrics.tsv");
                PathBuf::from(s)
            })
        })
    }
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// skipped. Returns `(line, key, value)` triples.
pub fn parse_config(text: &str) -> comick::Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key=value, found {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("duplicate key `{k}`"),
            });
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Options shared by every command. Flags override the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["ner", "pos"])]
    pub task: Option<String>,
    #[arg(long, value_parser = ["predictor", "random", "unk"])]
    pub oov_mode: Option<String>,
    /// Falls back to the COMICK_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Context words per side.
    #[arg(long)]
    pub kctx: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    #[arg(long)]
    pub word: Option<String>,
    /// Output file (evaluate) or file prefix (analyze).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Any config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        push("task", self.task.clone());
        push("oov_mode", self.oov_mode.clone());
        push("seed", self.seed.map(|s| s.to_string()));
        push("kctx", self.kctx.map(|s| s.to_string()));
        push("checkpoint", path(&self.checkpoint));
        push(
            "split",
            self.split.map(|s| s.to_possible_value().expect("no skipped variants").get_name().to_string()),
        );
        push("word", self.word.clone());
        push("out", path(&self.out));
        push("embeddings", path(&self.embeddings));
        push("train", path(&self.train));
        push("dev", path(&self.dev));
        push("test", path(&self.test));
        push("corpus", path(&self.corpus));
        push("epochs", self.epochs.map(|s| s.to_string()));
        push("metrics", path(&self.metrics));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// Defaults, then the config file, then flags. The seed falls back to
    /// COMICK_SEED when neither the file nor a flag sets it.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut rc = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for (line, k, v) in parse_config(&text).with_context(|| path.display().to_string())? {
                // Relative paths in a config file are relative to the file.
                let v = if PATH_KEYS.contains(&k.as_str()) && Path::new(&v).is_relative() {
                    base.join(&v).display().to_string()
                } else {
                    v
                };
                rc.set(&k, &v)
                    .with_context(|| format!("{}:{line}", path.display()))?;
            }
        }
        for (k, v) in self.overrides()? {
            rc.set(&k, &v)?;
        }
        if !rc.explicit.contains("seed") {
            if let Ok(v) = std::env::var(SEED_ENV) {
                rc.set("seed", &v).with_context(|| format!("from {SEED_ENV}"))?;
            }
        }
        Ok(rc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMode {
    /// Mean attention per gold tag.
    ByTag,
    /// Attention for each occurrence of --word.
    Trace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// 60-type corpus, 20% OOV, every type with one tag.
    Overfit,
    /// OOV class given by the preceding word.
    Context,
    /// OOV class given by a suffix.
    Suffix,
}

#[derive(Parser, Debug)]
#[command(name = "comick", version, about = "OOV embeddings from characters and context, trained with a bi-LSTM tagger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a tagger; writes the checkpoint and a per-epoch metrics log.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint on a corpus.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Score the gold tags against themselves.
        #[arg(long)]
        oracle: bool,
    },
    /// Attention reports over the OOV tokens of a corpus.
    Analyze {
        #[arg(value_enum)]
        mode: AnalyzeMode,
        #[command(flatten)]
        common: Common,
    },
    /// Predicted embedding and attention for one OOV token.
    Embed {
        #[command(flatten)]
        common: Common,
        /// Whitespace-tokenised sentence.
        #[arg(long)]
        sentence: String,
        /// Zero-based token index.
        #[arg(long)]
        position: usize,
    },
    /// Write a generated corpus (train.conll, test.conll, emb.txt).
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        sentences: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train { common } => {
            let rc = common.resolve()?;
            let report = cmd_train(&rc)?;
            writeln!(
                out,
                "trained {} epochs; best epoch {} with dev {} {}",
                report.epochs.len(),
                report.best_epoch,
                metric_name(rc.train.task),
                round2(report.best_metric)
            )?;
        }
        Command::Evaluate { common, oracle } => {
            let rc = common.resolve()?;
            let metrics = cmd_evaluate(&rc, oracle)?;
            for (k, v) in &metrics {
                writeln!(out, "{k}: {}", round2(*v))?;
            }
        }
        Command::Analyze { mode, common } => {
            let rc = common.resolve()?;
            out.write_all(cmd_analyze(&rc, mode)?.as_bytes())?;
        }
        Command::Embed {
            common,
            sentence,
            position,
        } => {
            let rc = common.resolve()?;
            let (emb, triple) = cmd_embed(&rc, &sentence, position)?;
            out.write_all(format_embedding(&emb, &triple).as_bytes())?;
        }
        Command::Synth {
            kind,
            out: dir,
            seed,
            sentences,
            dim,
        } => {
            cmd_synth(kind, &dir, seed, sentences, dim)?;
            writeln!(out, "wrote {}", dir.display())?;
        }
    }
    Ok(())
}

fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Ner => "f1",
        Task::Pos => "accuracy",
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| anyhow!("missing `{key}`: set it in the config or pass --{key}"))
}

fn load_table(path: &Path, lowercase: bool) -> Result<EmbeddingTable<f64>> {
    let mut table = read_embeddings(path, None)?;
    table.lowercase_fallback = lowercase;
    Ok(table)
}

fn load_corpus(path: &Path) -> Result<Vec<Sentence>> {
    Ok(read_conll(path)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Trains from `rc`, then writes the checkpoint and the metrics log.
pub fn cmd_train(rc: &RunConfig) -> Result<TrainReport> {
    let emb_path = required(&rc.embeddings, "embeddings")?;
    let ck_path = required(&rc.checkpoint, "checkpoint")?;
    let table = load_table(emb_path, rc.train.lowercase_fallback)?;
    let mut train_set = load_corpus(required(&rc.train_path, "train")?)?;
    let mut dev_set = match &rc.dev_path {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };

    let mut model = Model::from_corpus(rc.train.clone(), &train_set, &table)?;
    model.prepare(&mut train_set, &table);
    model.prepare(&mut dev_set, &table);
    let report = train(&mut model, &train_set, &dev_set, &table)?;

    let meta = BTreeMap::from([
        ("embeddings".to_string(), emb_path.display().to_string()),
        ("best_epoch".to_string(), report.best_epoch.to_string()),
    ]);
    write(ck_path, &save_checkpoint(&model, &meta))?;
    if let Some(log) = rc.metrics_path() {
        write(&log, &report.metrics_log())?;
    }
    Ok(report)
}

/// Loads the checkpoint and its embeddings table (`--embeddings` wins over
/// the path recorded at training time).
pub fn load_model(rc: &RunConfig) -> Result<(Model<f64>, EmbeddingTable<f64>)> {
    let ck_path = required(&rc.checkpoint, "checkpoint")?;
    let text = fs::read_to_string(ck_path).with_context(|| format!("cannot read {}", ck_path.display()))?;
    let (model, meta) = load_checkpoint::<f64>(&text).with_context(|| ck_path.display().to_string())?;
    let emb = match &rc.embeddings {
        Some(p) => p.clone(),
        None => PathBuf::from(
            meta.get("embeddings")
                .ok_or_else(|| anyhow!("checkpoint records no embeddings path; pass --embeddings"))?,
        ),
    };
    let table = load_table(&emb, model.config.lowercase_fallback)?;
    if table.dim() != model.d_emb {
        bail!(
            "{} has dimension {}, the checkpoint expects {}",
            emb.display(),
            table.dim(),
            model.d_emb
        );
    }
    Ok((model, table))
}

/// Reads the evaluation corpus and checks it against the model's task.
fn eval_corpus(rc: &RunConfig, model: &Model<f64>, table: &EmbeddingTable<f64>) -> Result<Vec<Sentence>> {
    let task = model.config.task;
    if rc.explicit.contains("task") && rc.train.task != task {
        return Err(Error::Config(format!(
            "task mismatch: the checkpoint was trained for {task}, {} was requested",
            rc.train.task
        ))
        .into());
    }
    let path = rc.eval_corpus()?;
    let mut sentences = load_corpus(path)?;
    if sentences.is_empty() {
        bail!("{} contains no sentences", path.display());
    }
    let gold = gold_tags(task, &sentences);
    if !gold.iter().flatten().any(|t| model.tag_id(t).is_some()) {
        return Err(Error::Config(format!(
            "task mismatch: no {task} tag of {} is in the checkpoint's tag set",
            path.display()
        ))
        .into());
    }
    model.prepare(&mut sentences, table);
    Ok(sentences)
}

/// Returns the named metrics (F1, precision, recall for NER; accuracy for
/// POS) and writes them as CSV when `out` is set.
pub fn cmd_evaluate(rc: &RunConfig, oracle: bool) -> Result<Vec<(&'static str, f64)>> {
    let (model, table) = load_model(rc)?;
    let sentences = eval_corpus(rc, &model, &table)?;
    let task = model.config.task;
    let gold = gold_tags(task, &sentences);
    let pred = if oracle {
        gold.clone()
    } else {
        evaluate(&model, &table, &sentences)?.predictions
    };
    let metrics = match task {
        Task::Ner => {
            let prf = span_f1(&pred, &gold)?;
            vec![("f1", prf.f1), ("precision", prf.precision), ("recall", prf.recall)]
        }
        Task::Pos => vec![("accuracy", token_accuracy(&pred, &gold)?)],
    };
    if let Some(out) = &rc.out {
        write(out, &metrics_csv(&metrics)?)?;
    }
    Ok(metrics)
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<out>.txt` and `<out>.csv`; returns the text table.
pub fn cmd_analyze(rc: &RunConfig, mode: AnalyzeMode) -> Result<String> {
    if mode == AnalyzeMode::Trace && rc.word.is_none() {
        bail!("usage: analyze trace needs --word");
    }
    let out = required(&rc.out, "out")?;
    let (model, table) = load_model(rc)?;
    let sentences = eval_corpus(rc, &model, &table)?;
    let records = collect_attention(&model, &table, &sentences)?;
    let (text, csv) = match mode {
        AnalyzeMode::ByTag => {
            let rows = attention_by_tag(&records, model.config.task);
            debug_assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), count_oov(&sentences));
            (by_tag_table(&rows), by_tag_csv(&rows)?)
        }
        AnalyzeMode::Trace => {
            let word = rc.word.as_deref().expect("checked above");
            let rows = attention_trace(word, &sentences, &records, rc.k_show);
            (trace_table(&rows), trace_csv(&rows)?)
        }
    };
    write(&with_extension(out, "txt"), &text)?;
    write(&with_extension(out, "csv"), &csv)?;
    Ok(text)
}

/// Predicted embedding and attention for the token at `position`.
pub fn cmd_embed(rc: &RunConfig, sentence: &str, position: usize) -> Result<(Vec<f64>, AttentionTriple)> {
    let (model, table) = load_model(rc)?;
    let p = model
        .predictor
        .as_ref()
        .ok_or_else(|| Error::Config(format!("embed needs a predictor checkpoint, this one is {}", model.config.oov_mode)))?;
    let tokens: Vec<Token> = sentence.split_whitespace().map(|w| Token::new(w, "_", "O")).collect();
    let n = tokens.len();
    let mut s = [Sentence::new(tokens)];
    model.prepare(&mut s, &table);
    let token = s[0]
        .tokens
        .get(position)
        .ok_or_else(|| anyhow!("position {position} is past the end of a {n}-token sentence"))?;
    if !token.is_oov {
        bail!(
            "{:?} at position {position} has a pretrained vector; only OOV words get predicted embeddings",
            token.surface
        );
    }
    let mut g = Graph::new(&model.store);
    let pred = predict_oov(&mut g, &s[0], position, model.config.window, p, &model.sources(&table))?;
    Ok((
        g.value(pred.embedding).to_vec(),
        AttentionTriple::from_slice(g.value(pred.attention)),
    ))
}

/// Embedding values on one line, then the triple at two decimals.
pub fn format_embedding(emb: &[f64], t: &AttentionTriple) -> String {
    let values: Vec<String> = emb.iter().map(|v| format!("{v:.6}")).collect();
    let [w, l, r] = round2_simplex(t.as_array());
    format!("{}\nword {w} left {l} right {r}\n", values.join(" "))
}

pub fn synth_data(kind: SynthKind, seed: u64, sentences: usize, dim: usize) -> SyntheticData<f64> {
    match kind {
        SynthKind::Overfit => overfit_corpus(seed, sentences, dim),
        SynthKind::Context => keyed_corpus(Cue::PrecedingWord, seed, sentences, sentences.div_ceil(5), dim),
        SynthKind::Suffix => keyed_corpus(Cue::Suffix, seed, sentences, sentences.div_ceil(5), dim),
    }
}

pub fn cmd_synth(kind: SynthKind, dir: &Path, seed: u64, sentences: usize, dim: usize) -> Result<()> {
    let d = synth_data(kind, seed, sentences, dim);
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(&dir.join("train.conll"), &serialize_conll(&d.train))?;
    write(&dir.join("test.conll"), &serialize_conll(&d.test))?;
    write(&dir.join("emb.txt"), &serialize_embeddings(&d.table))?;
    Ok(())
}

/// Sum of the three weights as printed.
pub fn rounded_triple_sum(t: &AttentionTriple) -> String {
    let sum: f64 = round2_simplex(t.as_array())
        .iter()
        .map(|v| v.parse::<f64>().expect("formatted number"))
        .sum();
    round2(sum)
}

/// Collapses an error chain onto one line.
pub fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}
