use std::ops::Range;

use serde::{Deserialize, Serialize};
use vizketch_core::hash::{combine, hash_bytes};

/// A contiguous window of one shard's physical rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Micropartition {
    pub worker: usize,
    /// Stable across restarts and worker counts: derived from the shard's
    /// file name and the window index. Seeds sampling.
    pub key: u64,
    pub shard: usize,
    pub rows: Range<usize>,
}

impl Micropartition {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn shard_key(name: &str) -> u64 {
    hash_bytes(0x5348_4152_4400, name.as_bytes())
}

/// Cuts `rows` physical rows into windows of at most `max_rows`. An empty
/// shard still gets one (empty) window so it takes part in every execution.
pub fn split_shard(worker: usize, shard: usize, name: &str, rows: usize, max_rows: usize) -> Vec<Micropartition> {
    let max_rows = max_rows.max(1);
    let base = shard_key(name);
    let count = rows.div_ceil(max_rows).max(1);
    (0..count)
        .map(|i| Micropartition {
            worker,
            key: combine(base, i as u64),
            shard,
            rows: (i * max_rows).min(rows)..((i + 1) * max_rows).min(rows),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_the_shard() {
        let parts = split_shard(0, 0, "a.csv", 250_001, 100_000);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts.iter().map(Micropartition::len).sum::<usize>(), 250_001);
        assert!(parts.windows(2).all(|w| w[0].rows.end == w[1].rows.start));
        assert!(parts.iter().all(|p| p.len() <= 100_000));
        assert_eq!(split_shard(0, 0, "e.csv", 0, 10).len(), 1);
    }

    #[test]
    fn keys_depend_on_name_not_worker() {
        let a = split_shard(0, 0, "x.csv", 30, 10);
        let b = split_shard(3, 7, "x.csv", 30, 10);
        let c = split_shard(0, 0, "y.csv", 30, 10);
        assert_eq!(a.iter().map(|p| p.key).collect::<Vec<_>>(), b.iter().map(|p| p.key).collect::<Vec<_>>());
        assert_ne!(a[0].key, c[0].key);
        assert_ne!(a[0].key, a[1].key);
    }
}
