use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Frozen pretrained vectors, one per word.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<T>,
    /// Retry lookups in lowercase when the exact surface is absent.
    pub lowercase_fallback: bool,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
            lowercase_fallback: true,
        }
    }

    /// Inserts `word` unless already present; returns whether it was added.
    pub fn insert(&mut self, word: &str, vector: &[T]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Shape {
                op: "embedding insert",
                left: vec![vector.len()],
                right: vec![self.dim],
            });
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn resolve(&self, word: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(word) {
            return Some(i);
        }
        if self.lowercase_fallback {
            let lower = word.to_lowercase();
            if lower != word {
                return self.index.get(&lower).copied();
            }
        }
        None
    }

    pub fn is_known(&self, word: &str) -> bool {
        self.resolve(word).is_some()
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.resolve(word)
            .map(|i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Reads `word v1 v2 … vd` lines. The dimension is taken from
/// `expected_dim` or else the first line; duplicates keep the first vector.
pub fn load_embeddings<T: Scalar, R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable<T>> {
    let mut table: Option<EmbeddingTable<T>> = expected_dim.map(EmbeddingTable::new);
    let mut buf = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        buf.clear();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Format {
                line: line_no,
                msg: format!("not a number: {f:?}"),
            })?;
            buf.push(T::of(v));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(buf.len()));
        if buf.is_empty() || buf.len() != table.dim {
            return Err(Error::Format {
                line: line_no,
                msg: format!("expected {} values, found {}", table.dim, buf.len()),
            });
        }
        table.insert(word, &buf)?;
    }
    Ok(table.unwrap_or_else(|| EmbeddingTable::new(expected_dim.unwrap_or(0))))
}

/// Inverse of [`load_embeddings`], one `word v1 … vd` line per entry in
/// insertion order, values in shortest round-trip form.
pub fn serialize_embeddings<T: Scalar>(table: &EmbeddingTable<T>) -> String {
    let mut out = String::new();
    for w in table.words() {
        out.push_str(w);
        for v in table.get(w).expect("listed word") {
            out.push_str(&format!(" {:?}", v.as_f64()));
        }
        out.push('\n');
    }
    out
}

pub fn read_embeddings<T: Scalar>(path: &Path, expected_dim: Option<usize>) -> Result<EmbeddingTable<T>> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    load_embeddings(std::io::BufReader::new(file), expected_dim)
}
