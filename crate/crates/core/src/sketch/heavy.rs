//! Heavy hitters: Misra–Gries counters over a full scan, or plain counts
//! over a sample thresholded at the root.

use std::collections::{BTreeMap, HashMap};

use super::request::SketchRequest;
use super::summary::HeavyHitters;
use super::Rows;
use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::table::Table;
use crate::value::{Datum, Value};

/// A cell reduced to a hashable word: dictionary code or raw bits.
fn key(col: &Column, row: usize) -> Option<u64> {
    match col.value(row) {
        Value::Missing => None,
        Value::Int(v) | Value::Timestamp(v) => Some(v as u64),
        Value::Float(v) => Some(v.to_bits()),
        Value::Str(c) => Some(c as u64),
    }
}

fn datum(col: &Column, key: u64) -> Datum {
    match col.kind() {
        crate::value::ValueKind::Int => Datum::Int(key as i64),
        crate::value::ValueKind::Timestamp => Datum::Timestamp(key as i64),
        crate::value::ValueKind::Float => Datum::Float(f64::from_bits(key)),
        crate::value::ValueKind::Str => Datum::Str(col.string(key as u32).to_owned()),
    }
}

pub(crate) fn identity(req: &SketchRequest, sampled: bool) -> HeavyHitters {
    HeavyHitters {
        entries: Vec::new(),
        n_processed: 0,
        k: req.top_k,
        sampled,
    }
}

fn finish(col: &Column, counts: HashMap<u64, u64>, n: u64, req: &SketchRequest, sampled: bool) -> HeavyHitters {
    let mut entries: Vec<(Datum, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .map(|(k, c)| (datum(col, k), c))
        .collect();
    entries.sort();
    HeavyHitters {
        entries,
        n_processed: n,
        k: req.top_k,
        sampled,
    }
}

/// Misra–Gries with `K` counters over every member row.
pub(crate) fn misra_gries(table: &Table, req: &SketchRequest) -> Result<HeavyHitters> {
    let col = table.column(req.column(0)?)?;
    let k = req.top_k as usize;
    let mut counters: HashMap<u64, u64> = HashMap::with_capacity(k + 1);
    let mut n = 0;
    for row in table.members().iter() {
        let Some(x) = key(col, row) else { continue };
        n += 1;
        if let Some(c) = counters.get_mut(&x) {
            *c += 1;
        } else if counters.len() < k {
            counters.insert(x, 1);
        } else {
            counters.retain(|_, c| {
                *c -= 1;
                *c > 0
            });
        }
    }
    Ok(finish(col, counters, n, req, false))
}

/// Exact counts of the sampled values.
pub(crate) fn sampled(table: &Table, req: &SketchRequest, rows: Rows) -> Result<HeavyHitters> {
    let col = table.column(req.column(0)?)?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut n = 0;
    for row in rows {
        if let Some(x) = key(col, row) {
            n += 1;
            *counts.entry(x).or_insert(0) += 1;
        }
    }
    Ok(finish(col, counts, n, req, true))
}

pub(crate) fn merge(a: &HeavyHitters, b: &HeavyHitters) -> Result<HeavyHitters> {
    if a.k != b.k || a.sampled != b.sampled {
        return Err(CoreError::invalid("heavy hitter summaries differ in K or method"));
    }
    let mut combined: BTreeMap<Datum, u64> = BTreeMap::new();
    for (d, c) in a.entries.iter().chain(&b.entries) {
        *combined.entry(d.clone()).or_insert(0) += c;
    }
    let k = a.k as usize;
    if !a.sampled && combined.len() > k {
        // Subtract the (K+1)-th largest counter and drop what is left at zero.
        let mut counts: Vec<u64> = combined.values().copied().collect();
        counts.sort_unstable_by(|x, y| y.cmp(x));
        let cut = counts[k];
        combined.retain(|_, c| {
            *c = c.saturating_sub(cut);
            *c > 0
        });
    }
    Ok(HeavyHitters {
        entries: combined.into_iter().collect(),
        n_processed: a.n_processed + b.n_processed,
        k: a.k,
        sampled: a.sampled,
    })
}

/// Values reported to the user: for a sample of size `n`, those seen at
/// least `3n/4K` times; for Misra–Gries, the surviving counters.
pub fn reported(h: &HeavyHitters) -> Vec<(Datum, u64)> {
    let mut out: Vec<(Datum, u64)> = if h.sampled {
        let threshold = 3.0 * h.n_processed as f64 / (4.0 * h.k as f64);
        h.entries
            .iter()
            .filter(|(_, c)| *c as f64 >= threshold)
            .cloned()
            .collect()
    } else {
        h.entries.clone()
    };
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
