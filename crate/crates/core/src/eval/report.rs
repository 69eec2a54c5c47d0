//! Plain-text and CSV renderings of metrics and attention reports. Numbers
//! are written with two decimals.

use super::attention::{TagAttentionRow, TraceRow};
use crate::error::{Error, Result};

pub fn round2(x: f64) -> String {
    format!("{x:.2}")
}

pub fn format_metric(x: f64) -> String {
    round2(x)
}

/// Two-decimal rendering of weights that sum to one. Hundredths are
/// floored and the missing ones go to the largest remainders (earliest
/// first on ties), so the printed values always add up to the rounded
/// total. Matches [`round2`] whenever plain rounding already adds up.
pub fn round2_simplex<const N: usize>(v: [f64; N]) -> [String; N] {
    let total = (v.iter().sum::<f64>() * 100.0).round() as i64;
    let mut cents = v.map(|x| (x * 100.0).floor() as i64);
    let mut order: Vec<usize> = (0..N).collect();
    let frac = |i: usize| v[i] * 100.0 - cents[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let missing = total - cents.iter().sum::<i64>();
    for &i in order.iter().take(missing.max(0) as usize) {
        cents[i] += 1;
    }
    cents.map(|c| format!("{}{}.{:02}", if c < 0 { "-" } else { "" }, c.abs() / 100, c.abs() % 100))
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let last = cells.len() - 1;
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == last {
                    c.clone()
                } else {
                    format!("{c:<w$}", w = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

const BY_TAG_HEADER: [&str; 5] = ["tag", "ex", "word", "left", "right"];
const TRACE_HEADER: [&str; 4] = ["word", "left", "right", "example"];

fn by_tag_cells(rows: &[TagAttentionRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let [w, l, rt] = round2_simplex([r.word, r.left, r.right]);
            vec![r.tag.clone(), r.count.to_string(), w, l, rt]
        })
        .collect()
}

fn trace_cells(rows: &[TraceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let [w, l, rt] = round2_simplex(r.triple.as_array());
            vec![w, l, rt, r.excerpt.clone()]
        })
        .collect()
}

pub fn by_tag_csv(rows: &[TagAttentionRow]) -> Result<String> {
    to_csv(&BY_TAG_HEADER, by_tag_cells(rows).into_iter())
}

pub fn by_tag_table(rows: &[TagAttentionRow]) -> String {
    aligned(&["Tag", "Ex", "Word", "Left", "Right"], &by_tag_cells(rows))
}

pub fn trace_csv(rows: &[TraceRow]) -> Result<String> {
    to_csv(&TRACE_HEADER, trace_cells(rows).into_iter())
}

pub fn trace_table(rows: &[TraceRow]) -> String {
    aligned(&["Word", "Left", "Right", "Examples"], &trace_cells(rows))
}

/// `metric,value` rows.
pub fn metrics_csv(metrics: &[(&str, f64)]) -> Result<String> {
    to_csv(
        &["metric", "value"],
        metrics.iter().map(|(k, v)| vec![k.to_string(), round2(*v)]),
    )
}
