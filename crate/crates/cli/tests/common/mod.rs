#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TRAIN: &str = "\
-DOCSTART- -X- -X- O

John NNP B-NP I-PER
Langmore NNP I-NP I-PER
said VBD B-VP O
. . O O

The DT B-NP O
bank NN I-NP O
in IN B-PP O
Zorbia NNP B-NP I-LOC
grew VBD B-VP O
. . O O

Langmore NNP B-NP I-PER
visited VBD B-VP O
Zorbia NNP B-NP I-LOC
. . O O

Mister NNP B-NP O
Quenton NNP I-NP I-PER
said VBD B-VP O
the DT B-NP O
bank NN I-NP O
grew VBD B-VP O
. . O O

Acme NNP B-NP I-ORG
bank NN I-NP O
in IN B-PP O
John NNP B-NP I-PER
. . O O
";

pub const EMB: &str = "\
john 0.1 -0.2 0.3 0.05
said -0.4 0.1 0.0 0.2
. 0.0 0.0 0.1 -0.1
the 0.2 0.2 -0.1 0.0
bank -0.3 0.4 0.1 0.1
in 0.1 0.1 0.1 0.1
grew 0.3 -0.1 -0.2 0.4
visited -0.2 -0.3 0.2 0.1
mister 0.4 0.0 0.3 -0.2
";

pub const CONFIG: &str = "\
# toy NER run
task = ner
train = train.conll
dev = train.conll
test = train.conll
embeddings = emb.txt
checkpoint = model.ck
epochs = 3
patience = 10
kctx = 2
d_char = 4
enc_hidden = 3
tag_hidden = 4
";

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("train.conll"), TRAIN).unwrap();
        fs::write(dir.path().join("emb.txt"), EMB).unwrap();
        fs::write(dir.path().join("run.cfg"), CONFIG).unwrap();
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn config(&self) -> String {
        self.path("run.cfg").display().to_string()
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }
}

pub fn comick(args: &[&str]) -> Output {
    comick_in(args, None)
}

/// Runs the binary with `COMICK_SEED` removed, or set to `seed`.
pub fn comick_in(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_comick"));
    cmd.args(args).env_remove("COMICK_SEED");
    if let Some(s) = seed {
        cmd.env("COMICK_SEED", s);
    }
    cmd.output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Asserts failure with exactly one diagnostic line and nothing on stdout.
pub fn assert_fails(o: &Output) -> String {
    assert!(!o.status.success(), "unexpected success: {}", stdout(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err:?}");
    assert!(o.stdout.is_empty());
    err
}

pub fn dir_str(p: &Path) -> String {
    p.display().to_string()
}
