//! Distinct-value sketches: HyperLogLog registers for counting, and a
//! bottom-k sample of distinct strings for alphabetical bucket boundaries.

use std::collections::BTreeMap;

use super::request::{BucketSpec, SketchRequest};
use super::sizing::string_bucket_k;
use super::summary::{DistinctRegisters, StringQuantiles};
use crate::bitmap::Bitmap;
use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::hash::hash_bytes;
use crate::table::Table;
use crate::value::Value;

/// Fixed so registers from different requests and sessions agree.
const HLL_SEED: u64 = 0x6869_6c6c_6f67_6c6f;

fn value_hash(col: &Column, v: Value) -> Option<u64> {
    let mut buf = [0u8; 9];
    let bytes: &[u8] = match v {
        Value::Missing => return None,
        Value::Str(c) => return Some(hash_bytes(HLL_SEED, col.string(c).as_bytes())),
        Value::Int(x) | Value::Timestamp(x) => {
            buf[0] = 1;
            buf[1..].copy_from_slice(&x.to_le_bytes());
            &buf
        }
        Value::Float(x) => {
            buf[0] = 2;
            buf[1..].copy_from_slice(&x.to_bits().to_le_bytes());
            &buf
        }
    };
    Some(hash_bytes(HLL_SEED, bytes))
}

pub(crate) fn hll_identity(req: &SketchRequest) -> DistinctRegisters {
    DistinctRegisters {
        precision: req.precision,
        registers: vec![0; 1 << req.precision],
    }
}

#[inline]
fn hll_insert(regs: &mut [u8], p: u8, h: u64) {
    let idx = (h >> (64 - p)) as usize;
    let rest = h << p;
    let rank = (rest.leading_zeros().min(64 - p as u32) + 1) as u8;
    if rank > regs[idx] {
        regs[idx] = rank;
    }
}

pub(crate) fn hll(table: &Table, req: &SketchRequest) -> Result<DistinctRegisters> {
    let col = table.column(req.column(0)?)?;
    let mut out = hll_identity(req);
    let p = req.precision;
    if let Some(dict) = col.dictionary() {
        // Hash each distinct code once.
        let mut seen = Bitmap::new(dict.len());
        for row in table.members().iter() {
            if let Some(c) = col.code(row) {
                seen.set(c as usize);
            }
        }
        for code in seen.iter_range(0, dict.len()) {
            hll_insert(&mut out.registers, p, hash_bytes(HLL_SEED, dict[code].as_bytes()));
        }
    } else {
        for row in table.members().iter() {
            if let Some(h) = value_hash(col, col.value(row)) {
                hll_insert(&mut out.registers, p, h);
            }
        }
    }
    Ok(out)
}

pub(crate) fn merge_hll(a: &DistinctRegisters, b: &DistinctRegisters) -> Result<DistinctRegisters> {
    if a.precision != b.precision || a.registers.len() != b.registers.len() {
        return Err(CoreError::invalid("distinct registers differ in precision"));
    }
    Ok(DistinctRegisters {
        precision: a.precision,
        registers: a.registers.iter().zip(&b.registers).map(|(x, y)| *x.max(y)).collect(),
    })
}

/// Harmonic-mean estimate with linear counting for small cardinalities.
pub fn estimate(d: &DistinctRegisters) -> f64 {
    let m = d.registers.len() as f64;
    let alpha = match d.registers.len() {
        16 => 0.673,
        32 => 0.697,
        64 => 0.709,
        _ => 0.7213 / (1.0 + 1.079 / m),
    };
    let sum: f64 = d.registers.iter().map(|&r| (-(r as f64)).exp2()).sum();
    let raw = alpha * m * m / sum;
    let zeros = d.registers.iter().filter(|&&r| r == 0).count();
    if raw <= 2.5 * m && zeros > 0 {
        m * (m / zeros as f64).ln()
    } else {
        raw
    }
}

pub(crate) fn string_quantiles_identity(req: &SketchRequest) -> StringQuantiles {
    let _ = req;
    StringQuantiles {
        sample: Vec::new(),
        k: string_bucket_k(),
        min: None,
        max: None,
        rows: 0,
        missing: 0,
    }
}

pub(crate) fn string_quantiles(table: &Table, req: &SketchRequest) -> Result<StringQuantiles> {
    let name = req.column(0)?;
    let col = table.column(name)?;
    let Some(dict) = col.dictionary() else {
        return Err(CoreError::kind_mismatch(name, "str", col.kind()));
    };
    let mut out = string_quantiles_identity(req);
    let mut seen = Bitmap::new(dict.len());
    for row in table.members().iter() {
        match col.code(row) {
            Some(c) => {
                out.rows += 1;
                seen.set(c as usize);
            }
            None => out.missing += 1,
        }
    }
    let mut sample: Vec<(u64, String)> = Vec::new();
    for code in seen.iter_range(0, dict.len()) {
        let s = &dict[code];
        if out.min.is_none() {
            out.min = Some(s.clone());
        }
        out.max = Some(s.clone());
        sample.push((hash_bytes(req.seed, s.as_bytes()), s.clone()));
    }
    let k = out.k as usize;
    if sample.len() > k {
        sample.select_nth_unstable(k);
        sample.truncate(k);
    }
    sample.sort();
    out.sample = sample;
    Ok(out)
}

pub(crate) fn merge_string_quantiles(a: &StringQuantiles, b: &StringQuantiles) -> Result<StringQuantiles> {
    if a.k != b.k {
        return Err(CoreError::invalid("string quantile summaries differ in k"));
    }
    let mut sample: Vec<(u64, String)> = a.sample.iter().chain(&b.sample).cloned().collect();
    sample.sort();
    sample.dedup();
    sample.truncate(a.k as usize);
    let min = match (&a.min, &b.min) {
        (Some(x), Some(y)) => Some(x.min(y).clone()),
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    let max = match (&a.max, &b.max) {
        (Some(x), Some(y)) => Some(x.max(y).clone()),
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    Ok(StringQuantiles {
        sample,
        k: a.k,
        min,
        max,
        rows: a.rows + b.rows,
        missing: a.missing + b.missing,
    })
}

/// Whether the sample holds every distinct string.
pub fn is_complete(q: &StringQuantiles) -> bool {
    q.sample.len() < q.k as usize
}

/// Bucket boundaries for a string histogram: every distinct value when
/// there are at most `max_buckets` of them, otherwise boundaries at evenly
/// spaced ranks of the distinct-value sample, starting at the minimum.
pub fn string_boundaries(q: &StringQuantiles, max_buckets: usize) -> Option<BucketSpec> {
    let min = q.min.clone()?;
    let mut sorted: Vec<&str> = q.sample.iter().map(|(_, s)| s.as_str()).collect();
    sorted.sort_unstable();
    let max_buckets = max_buckets.max(1);
    let boundaries: Vec<String> = if is_complete(q) && sorted.len() <= max_buckets {
        sorted.iter().map(|s| (*s).to_owned()).collect()
    } else {
        let mut b = vec![min];
        let len = sorted.len();
        for i in 1..max_buckets {
            let s = sorted[i * len / max_buckets];
            if b.last().is_some_and(|l| l.as_str() < s) {
                b.push(s.to_owned());
            }
        }
        b
    };
    Some(BucketSpec::Strings { boundaries })
}

/// Distinct counts per bucket, for checking boundary quality.
pub fn distinct_per_bucket(values: &[String], spec: &BucketSpec) -> Vec<u64> {
    let mut counts = BTreeMap::new();
    for v in values {
        if let Some(i) = spec.index_str(v) {
            *counts.entry(i).or_insert(0u64) += 1;
        }
    }
    (0..spec.count()).map(|i| counts.get(&i).copied().unwrap_or(0)).collect()
}
