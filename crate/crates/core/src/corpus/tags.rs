use crate::error::{Error, Result};

/// A parsed BIO/IOB1 tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

pub fn parse_tag(tag: &str) -> Option<Tag<'_>> {
    if tag == "O" {
        return Some(Tag::Outside);
    }
    let (prefix, kind) = tag.split_once('-')?;
    if kind.is_empty() {
        return None;
    }
    match prefix {
        "B" => Some(Tag::Begin(kind)),
        "I" => Some(Tag::Inside(kind)),
        _ => None,
    }
}

/// Rewrites every entity-initial `I-X` as `B-X`. Entity-initial means the
/// previous tag is `O`, absent, or of another type.
pub fn iob1_to_bio<S: AsRef<str>>(tags: &[S]) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev: Option<&str> = None;
    for (i, raw) in tags.iter().enumerate() {
        let raw = raw.as_ref();
        let tag = parse_tag(raw).ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("malformed tag {raw:?}"),
        })?;
        match tag {
            Tag::Inside(kind) if prev != Some(kind) => {
                out.push(format!("B-{kind}"));
                prev = Some(kind);
            }
            Tag::Inside(kind) | Tag::Begin(kind) => {
                out.push(raw.to_string());
                prev = Some(kind);
            }
            Tag::Outside => {
                out.push(raw.to_string());
                prev = None;
            }
        }
    }
    Ok(out)
}

/// No `I-X` without a preceding `B-X` or `I-X`.
pub fn is_well_formed_bio<S: AsRef<str>>(tags: &[S]) -> bool {
    let mut prev: Option<&str> = None;
    for raw in tags {
        match parse_tag(raw.as_ref()) {
            None => return false,
            Some(Tag::Outside) => prev = None,
            Some(Tag::Begin(k)) => prev = Some(k),
            Some(Tag::Inside(k)) => {
                if prev != Some(k) {
                    return false;
                }
            }
        }
    }
    true
}
