//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//!
//! Exits 0 unless `COMICK_ACCEPTANCE_STRICT=1`, in which case any FAIL makes
//! the run fail. The optional CoNLL criterion runs only when
//! `COMICK_CONLL_DIR` (holding `eng.train`, `eng.testa`, `eng.testb`) and
//! `COMICK_CONLL_EMBEDDINGS` are set.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use comick::corpus::{
    read_conll, read_embeddings, serialize_conll, serialize_embeddings, EmbeddingTable, Sentence,
    Token,
};
use comick::eval::{collect_attention, evaluate, extract_spans, round2, span_f1, Span};
use comick::gradcheck::{grad_check, grad_check_params};
use comick::graph::{Graph, Var};
use comick::model::{Model, ModelDims, OovMode, TrainConfig};
use comick::nn::{bilstm_encode, lstm_step, BiLstm, LstmParams};
use comick::optim::OptimizerConfig;
use comick::params::ParamStore;
use comick::predictor::{attend, combine, predict_oov, Encodings, PredictorParams};
use comick::synthetic::{keyed_corpus, overfit_corpus, Cue};
use comick::tagger::{assemble_embeddings, sentence_loss, tag_scores, TaggerParams};
use comick::train::train;
use comick::{Task, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_EPS: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const GRAD_SEEDS: u64 = 10;
const GRAD_BUDGET: Duration = Duration::from_secs(120);
const SIMPLEX_EVALS: usize = 1000;
const SIMPLEX_SUM_TOL: f64 = 1e-9;
const SPAN_SEQUENCES: usize = 10_000;
const SPAN_MAX_LEN: usize = 20;
const OVERFIT_MIN_ACC: f64 = 99.0;
const OVERFIT_EPOCHS: usize = 200;
const OVERFIT_BUDGET: Duration = Duration::from_secs(300);
const COSINE_MAX: f64 = 1.0 - 1e-9;
const SHIFT_SEEDS: u64 = 3;
const GAP_SEEDS: u64 = 5;
const CONLL_NER_GAP: f64 = 1.0;
const CONLL_POS_GAP: f64 = 0.5;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn jitter_store(store: &mut ParamStore<f64>, rng: &mut ChaCha8Rng, scale: f64) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
}

fn project(g: &mut Graph<f64>, v: Var, r: &[f64]) -> comick::Result<Var> {
    let r = g.input_vector(r);
    let m = g.mul(v, r)?;
    Ok(g.sum(m))
}

fn table(words: &[&str], dim: usize, seed: u64) -> EmbeddingTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EmbeddingTable::new(dim);
    for w in words {
        t.insert(w, &random_vec(&mut rng, dim)).unwrap();
    }
    t
}

fn sentence(words: &[(&str, &str)]) -> Sentence {
    Sentence::new(words.iter().map(|(w, t)| Token::new(*w, *t, *t)).collect())
}

fn config(mode: OovMode, seed: u64, dims: (usize, usize, usize), kctx: usize, lr: f64, epochs: usize) -> TrainConfig {
    TrainConfig {
        task: Task::Pos,
        oov_mode: mode,
        epochs,
        patience: epochs,
        seed,
        window: Window {
            size: kctx,
            markers: true,
        },
        optimizer: OptimizerConfig {
            lr,
            ..OptimizerConfig::default()
        },
        dims: ModelDims {
            d_char: dims.0,
            enc_hidden: dims.1,
            tag_hidden: dims.2,
        },
        ..TrainConfig::default()
    }
}

// ---------------------------------------------------------------- gradients

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut record = |name: &'static str, errs: Vec<f64>| {
        worst.push((name, errs.into_iter().fold(0.0, f64::max)));
    };

    record(
        "lstm_step",
        (0..GRAD_SEEDS)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut store = ParamStore::new();
                let p = LstmParams::init(&mut store, "l", 3, 2, &mut rng).unwrap();
                jitter_store(&mut store, &mut rng, 0.3);
                let (x, h0, c0) = (random_vec(&mut rng, 3), random_vec(&mut rng, 2), random_vec(&mut rng, 2));
                let (rh, rc) = (random_vec(&mut rng, 2), random_vec(&mut rng, 2));
                grad_check(
                    &store,
                    |g| {
                        let (x, h0, c0) = (g.input_vector(&x), g.input_vector(&h0), g.input_vector(&c0));
                        let (h, c) = lstm_step(g, x, h0, c0, &p)?;
                        let a = project(g, h, &rh)?;
                        let b = project(g, c, &rc)?;
                        g.add(a, b)
                    },
                    GRAD_EPS,
                )
                .unwrap()
                .max_rel_error
            })
            .collect(),
    );

    record(
        "bilstm_encode",
        (0..GRAD_SEEDS)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut store = ParamStore::new();
                let bi = BiLstm::init(&mut store, "b", 2, 2, true, &mut rng).unwrap();
                jitter_store(&mut store, &mut rng, 0.3);
                let seq: Vec<Vec<f64>> = (0..4).map(|_| random_vec(&mut rng, 2)).collect();
                let r = random_vec(&mut rng, 4);
                grad_check(
                    &store,
                    |g| {
                        let vars: Vec<_> = seq.iter().map(|v| g.input_vector(v)).collect();
                        let full = bilstm_encode(g, &vars, &bi)?;
                        let empty = bilstm_encode(g, &[], &bi)?;
                        let both = g.add(full, empty)?;
                        project(g, both, &r)
                    },
                    GRAD_EPS,
                )
                .unwrap()
                .max_rel_error
            })
            .collect(),
    );

    for (name, with_combine) in [("attend", false), ("combine", true)] {
        record(
            name,
            (0..GRAD_SEEDS)
                .map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut store = ParamStore::new();
                    let p = PredictorParams::init(&mut store, 5, 3, 2, 4, &mut rng).unwrap();
                    jitter_store(&mut store, &mut rng, 0.3);
                    let enc: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 4)).collect();
                    let r = random_vec(&mut rng, if with_combine { 4 } else { 3 });
                    let mut ids = vec![p.attn_w, p.attn_b];
                    if with_combine {
                        ids.extend([p.out_w, p.out_b]);
                    }
                    grad_check_params(
                        &store,
                        &ids,
                        |g| {
                            let e = Encodings {
                                chars: g.input_vector(&enc[0]),
                                left: g.input_vector(&enc[1]),
                                right: g.input_vector(&enc[2]),
                            };
                            let a = attend(g, &e, &p)?;
                            let out = if with_combine { combine(g, &e, a, &p)? } else { a };
                            project(g, out, &r)
                        },
                        GRAD_EPS,
                    )
                    .unwrap()
                    .max_rel_error
                })
                .collect(),
        );
    }

    record(
        "tag_scores",
        (0..GRAD_SEEDS)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut store = ParamStore::new();
                let p = TaggerParams::init(&mut store, 3, 2, 4, &mut rng).unwrap();
                jitter_store(&mut store, &mut rng, 0.3);
                let emb: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 3)).collect();
                let gold: Vec<usize> = (0..3).map(|_| rng.gen_range(0..4)).collect();
                grad_check(
                    &store,
                    |g| {
                        let vars: Vec<_> = emb.iter().map(|v| g.input_vector(v)).collect();
                        let scores = tag_scores(g, &vars, &p)?;
                        sentence_loss(g, &scores, &gold)
                    },
                    GRAD_EPS,
                )
                .unwrap()
                .max_rel_error
            })
            .collect(),
    );

    let t = table(&["the", "cat", "sat", "a"], 4, 7);
    let mut sents = vec![
        sentence(&[("the", "DT"), ("zorp", "NN"), ("sat", "VB")]),
        sentence(&[("a", "DT"), ("cat", "NN"), ("sat", "VB")]),
    ];
    let joint: Vec<f64> = (0..GRAD_SEEDS)
        .map(|seed| {
            let mut m = Model::from_corpus(config(OovMode::Predictor, seed, (3, 2, 3), 2, 1e-3, 1), &sents, &t).unwrap();
            m.prepare(&mut sents, &t);
            jitter_store(&mut m.store, &mut ChaCha8Rng::seed_from_u64(seed), 0.3);
            let s = &sents[0];
            let gold = m.gold_ids(s).unwrap();
            grad_check(
                &m.store,
                |g| {
                    let asm = assemble_embeddings(g, s, OovMode::Predictor, &m, &t)?;
                    let scores = tag_scores(g, &asm.embeddings, &m.tagger)?;
                    sentence_loss(g, &scores, &gold)
                },
                GRAD_EPS,
            )
            .unwrap()
            .max_rel_error
        })
        .collect();
    let joint_failing = joint.iter().filter(|e| **e >= GRAD_TOL).count();
    record("joint", joint);

    let elapsed = start.elapsed();
    let pass = worst.iter().all(|(_, e)| *e < GRAD_TOL) && elapsed < GRAD_BUDGET;
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(
        pass,
        format!(
            "max rel error < {GRAD_TOL:e} over {GRAD_SEEDS} seeds: {}; joint fails on {joint_failing}/{GRAD_SEEDS} seeds; {:.1}s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

// ------------------------------------------------------------------ simplex

fn random_word(rng: &mut ChaCha8Rng) -> String {
    (0..rng.gen_range(1..10)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

fn simplex_suite() -> Outcome {
    let known = ["the", "cat", "sat", "on", "a", "mat", "john", "said"];
    let t = table(&known, 6, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut bad, mut worst_sum) = (0usize, 0.0f64);
    for batch in 0..10u64 {
        // A fresh, randomised predictor every hundred evaluations.
        let corpus: Vec<Sentence> = (0..5)
            .map(|_| Sentence::new((0..6).map(|_| Token::new(random_word(&mut rng), "X", "X")).collect()))
            .collect();
        let mut m = Model::from_corpus(config(OovMode::Predictor, batch, (4, 3, 3), 3, 1e-3, 1), &corpus, &t).unwrap();
        jitter_store(&mut m.store, &mut rng, 0.5);
        let p = m.predictor.clone().unwrap();
        for _ in 0..SIMPLEX_EVALS / 10 {
            let len = rng.gen_range(1..9);
            let target = rng.gen_range(0..len);
            let tokens: Vec<Token> = (0..len)
                .map(|i| {
                    let w = if i == target || rng.gen_bool(0.3) {
                        format!("q{}", random_word(&mut rng))
                    } else {
                        known[rng.gen_range(0..known.len())].to_string()
                    };
                    Token::new(w, "X", "X")
                })
                .collect();
            let mut s = [Sentence::new(tokens)];
            m.prepare(&mut s, &t);
            let mut g = Graph::new(&m.store);
            let pred = predict_oov(&mut g, &s[0], target, m.config.window, &p, &m.sources(&t)).unwrap();
            let a = g.value(pred.attention);
            let sum: f64 = a.iter().sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
            if a.len() != 3 || a.iter().any(|v| !(*v > 0.0 && *v < 1.0)) || (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("{SIMPLEX_EVALS} evaluations, {bad} outside the open simplex, max |sum-1| {worst_sum:.1e}"),
    )
}

// ------------------------------------------------------------------ oracles

/// Independent span oracle: every (start, end, kind) is tested directly.
fn scan_spans(tags: &[String]) -> BTreeSet<Span> {
    let kind = |t: &str| t.split_once('-').map(|(_, k)| k.to_string());
    let mut out = BTreeSet::new();
    let n = tags.len();
    for k in ["PER", "LOC", "ORG", "MISC"] {
        let (b, i_) = (format!("B-{k}"), format!("I-{k}"));
        for start in 0..n {
            let opens = tags[start] == b
                || (tags[start] == i_ && (start == 0 || kind(&tags[start - 1]).as_deref() != Some(k)));
            if !opens {
                continue;
            }
            let mut end = start;
            while end + 1 < n && tags[end + 1] == i_ {
                end += 1;
            }
            out.insert(Span {
                kind: k.to_string(),
                start,
                end,
            });
        }
    }
    out
}

fn oracle_suite() -> Outcome {
    let alphabet = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-MISC", "I-MISC"];
    let mut rng = ChaCha8Rng::seed_from_u64(2003);
    let mut disagreements = 0;
    for _ in 0..SPAN_SEQUENCES {
        let len = rng.gen_range(0..=SPAN_MAX_LEN);
        let tags: Vec<String> = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
            .collect();
        let found = extract_spans(&tags).unwrap();
        let set: BTreeSet<Span> = found.iter().cloned().collect();
        if set.len() != found.len() || set != scan_spans(&tags) {
            disagreements += 1;
        }
    }
    let v = |t: &[&str]| t.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let gold = vec![v(&["B-PER", "I-PER", "O", "B-LOC", "O", "B-ORG"])];
    let pred = vec![v(&["B-PER", "I-PER", "O", "B-LOC", "I-LOC", "O"])];
    let prf = span_f1(&pred, &gold).unwrap();
    let shown = (round2(prf.precision), round2(prf.recall), round2(prf.f1));
    let fixture_ok = shown == ("50.00".into(), "33.33".into(), "40.00".into());
    outcome(
        disagreements == 0 && fixture_ok,
        format!(
            "{disagreements}/{SPAN_SEQUENCES} disagreements; fixture P={} R={} F1={}",
            shown.0, shown.1, shown.2
        ),
    )
}

// ------------------------------------------------------------------ overfit

fn overfit_run(seed: u64) -> (comick::train::TrainReport, ParamStore<f64>, f64) {
    let mut d = overfit_corpus::<f64>(seed, 50, 10);
    let mut cfg = config(OovMode::Predictor, seed, (8, 10, 12), 3, 0.01, OVERFIT_EPOCHS);
    cfg.patience = 10;
    let mut m = Model::from_corpus(cfg, &d.train, &d.table).unwrap();
    m.prepare(&mut d.train, &d.table);
    let report = train(&mut m, &d.train, &[], &d.table).unwrap();
    let acc = evaluate(&m, &d.table, &d.train).unwrap().metric;
    (report, m.store, acc)
}

fn overfit_suite() -> Outcome {
    let seed = 0;
    let d = overfit_corpus::<f64>(seed, 50, 10);
    // 60 generated types: 48 in the table, 12 held out of it.
    let types: BTreeSet<&str> = d.train.iter().flat_map(|s| s.surfaces()).collect();
    let oov_types = d.oov_types.len();
    let shape_ok = d.train.len() == 50
        && d.table.len() + oov_types == 60
        && oov_types * 5 == 60
        && d.oov_types.iter().all(|w| !d.table.is_known(w))
        && types.iter().all(|w| d.table.is_known(w) || d.oov_types.iter().any(|o| o == w));

    let start = Instant::now();
    let (report, store, acc) = overfit_run(seed);
    let elapsed = start.elapsed();
    let (report2, store2, _) = overfit_run(seed);
    let deterministic = report == report2 && store == store2;
    outcome(
        shape_ok && acc >= OVERFIT_MIN_ACC && deterministic && elapsed < OVERFIT_BUDGET,
        format!(
            "{} types ({} in use), {oov_types} OOV; train accuracy {acc:.2} after {} epochs (best {}); repeat identical: {deterministic}; {:.1}s",
            d.table.len() + oov_types,
            types.len(),
            report.epochs.len(),
            report.best_epoch,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- contexts

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn context_suite() -> Outcome {
    let words = ["the", "a", "john", "said", "in", "of", "bank", "grew", "to", "city", "new", "old"];
    let t = table(&words, 6, 21);
    let mut corpus = vec![sentence(&[("the", "X"), ("langmore", "X"), ("said", "X")])];
    let mut m = Model::from_corpus(config(OovMode::Predictor, 21, (4, 4, 3), 3, 1e-3, 1), &corpus, &t).unwrap();
    jitter_store(&mut m.store, &mut ChaCha8Rng::seed_from_u64(21), 0.3);
    m.prepare(&mut corpus, &t);
    let p = m.predictor.clone().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut contexts: Vec<(Vec<&str>, Vec<&str>)> = Vec::new();
    while contexts.len() < 10 {
        let left: Vec<&str> = (0..rng.gen_range(0..3)).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let right: Vec<&str> = (0..rng.gen_range(0..3)).map(|_| words[rng.gen_range(0..words.len())]).collect();
        if !contexts.contains(&(left.clone(), right.clone())) {
            contexts.push((left, right));
        }
    }
    let embed = |left: &[&str], right: &[&str]| {
        let mut tokens: Vec<(&str, &str)> = left.iter().map(|w| (*w, "X")).collect();
        tokens.push(("langmore", "X"));
        tokens.extend(right.iter().map(|w| (*w, "X")));
        let mut s = [sentence(&tokens)];
        m.prepare(&mut s, &t);
        let mut g = Graph::new(&m.store);
        let pred = predict_oov(&mut g, &s[0], left.len(), m.config.window, &p, &m.sources(&t)).unwrap();
        g.value(pred.embedding).to_vec()
    };
    let embs: Vec<Vec<f64>> = contexts.iter().map(|(l, r)| embed(l, r)).collect();
    let mut max_cos = f64::NEG_INFINITY;
    for i in 0..embs.len() {
        for j in i + 1..embs.len() {
            max_cos = max_cos.max(cosine(&embs[i], &embs[j]));
        }
    }
    let repeat_same = contexts.iter().zip(&embs).all(|((l, r), e)| embed(l, r) == *e);
    outcome(
        max_cos < COSINE_MAX && repeat_same,
        format!("10 contexts, max pairwise cosine {max_cos:.6}; identical contexts identical: {repeat_same}"),
    )
}

// -------------------------------------------------------- keyed corpora runs

/// Capacity-limited tagger (hidden 2) and a one-word window; see the
/// decisions ledger for why a larger tagger makes the shift unreliable.
fn keyed_config(mode: OovMode, seed: u64) -> TrainConfig {
    config(mode, seed, (8, 10, 2), 1, 0.01, 30)
}

struct KeyedRun {
    test_accuracy: f64,
    /// Mean (word, left, right) attention over held-out OOV tokens.
    attention: Option<[f64; 3]>,
}

fn keyed_run(cue: Cue, mode: OovMode, seed: u64) -> KeyedRun {
    let mut d = keyed_corpus::<f64>(cue, seed, 200, 30, 10);
    let mut m = Model::from_corpus(keyed_config(mode, seed), &d.train, &d.table).unwrap();
    m.prepare(&mut d.train, &d.table);
    m.prepare(&mut d.test, &d.table);
    train(&mut m, &d.train, &[], &d.table).unwrap();
    let test_accuracy = evaluate(&m, &d.table, &d.test).unwrap().metric;
    let attention = (mode == OovMode::Predictor).then(|| {
        let recs = collect_attention(&m, &d.table, &d.test).unwrap();
        let mut mean = [0.0; 3];
        for r in &recs {
            for (acc, v) in mean.iter_mut().zip(r.triple.as_array()) {
                *acc += v / recs.len() as f64;
            }
        }
        mean
    });
    KeyedRun {
        test_accuracy,
        attention,
    }
}

type Job<T> = Box<dyn FnOnce() -> T + Send>;

fn parallel<T: Send>(jobs: Vec<Job<T>>) -> Vec<T> {
    thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(j)).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn attention_shift_suite() -> Outcome {
    let mut jobs: Vec<Job<(Cue, [f64; 3])>> = Vec::new();
    for cue in [Cue::PrecedingWord, Cue::Suffix] {
        for seed in 0..SHIFT_SEEDS {
            jobs.push(Box::new(move || {
                (cue, keyed_run(cue, OovMode::Predictor, seed).attention.expect("predictor run"))
            }));
        }
    }
    let runs = parallel(jobs);
    let votes = |cue: Cue, left_wins: bool| {
        runs.iter()
            .filter(|(c, a)| *c == cue && (a[1] > a[0]) == left_wins)
            .count() as u64
    };
    let ctx = votes(Cue::PrecedingWord, true);
    let suffix = votes(Cue::Suffix, false);
    let fmt = |cue: Cue| {
        runs.iter()
            .filter(|(c, _)| *c == cue)
            .map(|(_, a)| format!("{:.2}/{:.2}", a[0], a[1]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        2 * ctx > SHIFT_SEEDS && 2 * suffix > SHIFT_SEEDS,
        format!(
            "context cue: left > word on {ctx}/{SHIFT_SEEDS} seeds (word/left {}); suffix cue: word > left on {suffix}/{SHIFT_SEEDS} (word/left {})",
            fmt(Cue::PrecedingWord),
            fmt(Cue::Suffix)
        ),
    )
}

fn baseline_gap_suite() -> Outcome {
    let mut jobs: Vec<Job<(OovMode, f64)>> = Vec::new();
    for mode in [OovMode::Predictor, OovMode::Random] {
        for seed in 0..GAP_SEEDS {
            jobs.push(Box::new(move || (mode, keyed_run(Cue::Suffix, mode, seed).test_accuracy)));
        }
    }
    let runs = parallel(jobs);
    let mean = |mode: OovMode| {
        runs.iter().filter(|(m, _)| *m == mode).map(|(_, a)| a).sum::<f64>() / GAP_SEEDS as f64
    };
    let (pred, rand) = (mean(OovMode::Predictor), mean(OovMode::Random));
    outcome(
        pred >= rand,
        format!("held-out OOV test accuracy over {GAP_SEEDS} seeds: predictor {pred:.2}, random {rand:.2}"),
    )
}

// --------------------------------------------------------------- cmd_train

fn comick(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_comick"))
        .args(args)
        .env_remove("COMICK_SEED")
        .output()
        .expect("binary runs")
}

fn determinism_suite() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = keyed_corpus::<f64>(Cue::PrecedingWord, 4, 40, 10, 8);
    let write = |name: &str, text: String| std::fs::write(dir.path().join(name), text).unwrap();
    write("train.conll", serialize_conll(&d.train));
    write("dev.conll", serialize_conll(&d.test));
    write("emb.txt", serialize_embeddings(&d.table));
    write(
        "run.cfg",
        "task = ner\ntrain = train.conll\ndev = dev.conll\nembeddings = emb.txt\n\
         epochs = 4\nkctx = 2\nd_char = 6\nenc_hidden = 6\ntag_hidden = 6\nseed = 5\n"
            .to_string(),
    );
    let cfg = dir.path().join("run.cfg").display().to_string();
    let run = |name: &str| -> Option<(Vec<u8>, Vec<u8>)> {
        let ck = dir.path().join(name);
        let o = comick(&["train", "--config", &cfg, "--checkpoint", &ck.display().to_string()]);
        if !o.status.success() {
            return None;
        }
        let log = PathBuf::from(format!("{}.metrics.tsv", ck.display()));
        Some((std::fs::read(&ck).ok()?, std::fs::read(log).ok()?))
    };
    match (run("a.ck"), run("b.ck")) {
        (Some(a), Some(b)) => outcome(
            a == b,
            format!(
                "checkpoints identical: {} ({} bytes); metrics logs identical: {}",
                a.0 == b.0,
                a.0.len(),
                a.1 == b.1
            ),
        ),
        _ => outcome(false, "comick train failed".into()),
    }
}

// ------------------------------------------------------------------- CoNLL

fn conll_suite() -> Outcome {
    let (Ok(dir), Ok(emb)) = (std::env::var("COMICK_CONLL_DIR"), std::env::var("COMICK_CONLL_EMBEDDINGS")) else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "set COMICK_CONLL_DIR and COMICK_CONLL_EMBEDDINGS to run".into(),
        };
    };
    let dir = Path::new(&dir);
    let load = |name: &str| read_conll(&dir.join(name)).unwrap();
    let table: EmbeddingTable<f64> = read_embeddings(Path::new(&emb), None).unwrap();
    let (train_set, dev_set, test_set) = (load("eng.train"), load("eng.testa"), load("eng.testb"));

    let mut jobs: Vec<Job<((Task, OovMode), f64)>> = Vec::new();
    for task in [Task::Ner, Task::Pos] {
        for mode in [OovMode::Predictor, OovMode::Random] {
            let (mut tr, mut dv, mut te, table) = (train_set.clone(), dev_set.clone(), test_set.clone(), table.clone());
            jobs.push(Box::new(move || {
                let cfg = TrainConfig {
                    task,
                    oov_mode: mode,
                    ..TrainConfig::default()
                };
                let mut m = Model::from_corpus(cfg, &tr, &table).unwrap();
                m.prepare(&mut tr, &table);
                m.prepare(&mut dv, &table);
                m.prepare(&mut te, &table);
                train(&mut m, &tr, &dv, &table).unwrap();
                ((task, mode), evaluate(&m, &table, &te).unwrap().metric)
            }));
        }
    }
    let runs = parallel(jobs);
    let get = |task, mode| runs.iter().find(|(k, _)| *k == (task, mode)).unwrap().1;
    let ner_gap = get(Task::Ner, OovMode::Predictor) - get(Task::Ner, OovMode::Random);
    let pos_gap = get(Task::Pos, OovMode::Predictor) - get(Task::Pos, OovMode::Random);
    outcome(
        ner_gap >= CONLL_NER_GAP && pos_gap >= CONLL_POS_GAP,
        format!("NER F1 gap {ner_gap:.2} (need {CONLL_NER_GAP}), POS accuracy gap {pos_gap:.2} (need {CONLL_POS_GAP})"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("gradient suite", gradient_suite),
        ("simplex suite", simplex_suite),
        ("oracle equivalence", oracle_suite),
        ("overfit", overfit_suite),
        ("context sensitivity", context_suite),
        ("attention shift", attention_shift_suite),
        ("baseline gap", baseline_gap_suite),
        ("cmd_train determinism", determinism_suite),
        ("CoNLL 2003 integration", conll_suite),
    ];
    let start = Instant::now();
    let results: Vec<(&str, Outcome)> = thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(name, f)| (*name, s.spawn(f)))
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| {
                let out = h.join().unwrap_or_else(|_| Outcome {
                    verdict: Verdict::Fail,
                    detail: "panicked".into(),
                });
                (name, out)
            })
            .collect()
    });

    println!("acceptance: {} criteria", results.len());
    let mut failed = 0;
    for (name, out) in &results {
        let tag = match out.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} {name}: {}", out.detail);
    }
    println!("acceptance: {failed} failed, {:.1}s", start.elapsed().as_secs_f64());
    if failed > 0 && std::env::var("COMICK_ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
