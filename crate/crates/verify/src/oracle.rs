//! Brute-force answers computed straight from the raw values, sharing no
//! code with the sketches they check.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{Binomial, DiscreteCDF};

/// Index of `v` among `count` equal-width buckets over `[min, max]`, the
/// last bucket closed.
pub fn bucket_of(v: f64, min: f64, max: f64, count: usize) -> Option<usize> {
    if !(min..=max).contains(&v) {
        return None;
    }
    if max == min {
        return Some(0);
    }
    let i = ((v - min) / (max - min) * count as f64).floor() as usize;
    Some(i.min(count - 1))
}

pub fn histogram(values: &[f64], min: f64, max: f64, count: usize) -> Vec<u64> {
    let mut out = vec![0u64; count];
    for &v in values {
        if let Some(i) = bucket_of(v, min, max, count) {
            out[i] += 1;
        }
    }
    out
}

/// Bars scaled so the largest is `height` pixels, rounded to the nearest.
pub fn ideal_bars(counts: &[u64], height: u32) -> Vec<i64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0; counts.len()];
    }
    counts.iter().map(|&c| (c as f64 * height as f64 / max as f64).round() as i64).collect()
}

/// Fraction of values at or left of each of `pixels` columns.
pub fn cdf(values: &[f64], min: f64, max: f64, pixels: usize) -> Vec<f64> {
    let counts = histogram(values, min, max, pixels);
    let n = values.len() as f64;
    let mut acc = 0u64;
    counts
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n
        })
        .collect()
}

pub fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn frequencies<T: Hash + Eq + Clone>(values: &[T]) -> HashMap<T, u64> {
    let mut m = HashMap::new();
    for v in values {
        *m.entry(v.clone()).or_insert(0) += 1;
    }
    m
}

pub fn distinct<T: Hash + Eq + Clone>(values: &[T]) -> usize {
    frequencies(values).len()
}

/// One-sided exact binomial test: whether `successes` out of `trials` is
/// consistent with a success rate of at least `p` at level `alpha`.
pub fn binomial_not_rejected(successes: u64, trials: u64, p: f64, alpha: f64) -> bool {
    binomial_lower_tail(successes, trials, p) >= alpha
}

/// `P(X <= successes)` for `X ~ Binomial(trials, p)`.
pub fn binomial_lower_tail(successes: u64, trials: u64, p: f64) -> f64 {
    Binomial::new(p, trials).expect("valid binomial").cdf(successes)
}
