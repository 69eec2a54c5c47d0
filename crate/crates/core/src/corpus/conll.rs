use std::io::BufRead;
use std::path::Path;

use super::tags::iob1_to_bio;
use super::{Sentence, Token};
use crate::error::{Error, Result};

const DOC_MARKER: &str = "-DOCSTART-";

/// Parses the four-column CoNLL 2003 layout `surface POS chunk NER`.
///
/// Blank lines end sentences, `-DOCSTART-` rows are dropped together with
/// the empty pseudo-sentence they form, the chunk column is ignored and
/// entity tags are rewritten from IOB1 to BIO.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut rows: Vec<(usize, Token)> = Vec::new();

    let flush = |rows: &mut Vec<(usize, Token)>, out: &mut Vec<Sentence>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let tags: Vec<&str> = rows.iter().map(|(_, t)| t.ner.as_str()).collect();
        let bio = iob1_to_bio(&tags).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line: rows[line - 1].0,
                msg,
            },
            other => other,
        })?;
        let tokens = rows
            .drain(..)
            .zip(bio)
            .map(|((_, mut t), tag)| {
                t.ner = tag;
                t
            })
            .collect();
        out.push(Sentence::new(tokens));
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            flush(&mut rows, &mut sentences)?;
            continue;
        }
        if cols[0] == DOC_MARKER {
            flush(&mut rows, &mut sentences)?;
            continue;
        }
        if cols.len() < 4 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        rows.push((line_no, Token::new(cols[0], cols[1], cols[3])));
    }
    flush(&mut rows, &mut sentences)?;
    Ok(sentences)
}

pub fn read_conll(path: &Path) -> Result<Vec<Sentence>> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_conll(std::io::BufReader::new(file))
}

/// Writes sentences back in four-column form with a placeholder chunk
/// column.
pub fn serialize_conll(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for t in &s.tokens {
            out.push_str(&format!("{} {} O {}\n", t.surface, t.pos, t.ner));
        }
        out.push('\n');
    }
    out
}
