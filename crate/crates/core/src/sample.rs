//! Uniform row sampling over a membership set.
//!
//! Dense sets are walked in increasing row order with geometric skips, so the
//! cost is proportional to the sample, not the table. Sparse sets rank their
//! members by a seeded row hash and keep the smallest ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::hash::{combine, hash_row};
use crate::membership::{MemberIter, MembershipSet};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub target_n: u64,
    /// Member rows of the whole dataset, not just the partition being sampled.
    pub population: u64,
}

impl SampleSpec {
    /// Per-row inclusion probability. Partitions of one dataset share it,
    /// which is what lets independently sampled partitions merge.
    pub fn rate(&self) -> f64 {
        if self.population == 0 || self.target_n >= self.population {
            1.0
        } else {
            self.target_n as f64 / self.population as f64
        }
    }

    pub fn is_full_scan(&self) -> bool {
        self.rate() >= 1.0
    }

    /// The spec a single partition uses: same rate, its own seed.
    pub fn for_partition(&self, partition_key: u64) -> SampleSpec {
        SampleSpec {
            seed: combine(self.seed, partition_key),
            ..*self
        }
    }
}

/// Member rows of `table` chosen at `spec.rate()`.
pub fn sample_rows<'a>(table: &'a Table, spec: &SampleSpec) -> SampleIter<'a> {
    sample_members(table.members(), spec)
}

pub fn sample_members<'a>(members: &'a MembershipSet, spec: &SampleSpec) -> SampleIter<'a> {
    let rate = spec.rate();
    if rate >= 1.0 {
        return SampleIter::All(members.iter());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match members {
        MembershipSet::Dense { bits, window, .. } => {
            if rate <= 0.0 {
                return SampleIter::Rows(Vec::new().into_iter());
            }
            SampleIter::Skip {
                bits,
                pos: window.start,
                end: window.end,
                log_q: (-rate).ln_1p(),
                rng,
            }
        }
        MembershipSet::Sparse { rows, .. } => {
            let expected = rate * rows.len() as f64;
            let mut k = expected.floor() as usize;
            if rng.gen::<f64>() < expected - k as f64 {
                k += 1;
            }
            let mut ranked: Vec<(u64, u32)> =
                rows.iter().map(|&r| (hash_row(spec.seed, r as u64), r)).collect();
            if k < ranked.len() {
                ranked.select_nth_unstable(k);
                ranked.truncate(k);
            }
            let mut chosen: Vec<usize> = ranked.into_iter().map(|(_, r)| r as usize).collect();
            chosen.sort_unstable();
            SampleIter::Rows(chosen.into_iter())
        }
    }
}

pub enum SampleIter<'a> {
    All(MemberIter<'a>),
    Skip {
        bits: &'a Bitmap,
        pos: usize,
        end: usize,
        /// ln(1 - rate)
        log_q: f64,
        rng: ChaCha8Rng,
    },
    Rows(std::vec::IntoIter<usize>),
}

impl Iterator for SampleIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            SampleIter::All(it) => it.next(),
            SampleIter::Rows(it) => it.next(),
            SampleIter::Skip {
                bits,
                pos,
                end,
                log_q,
                rng,
            } => {
                // Number of members to skip before the next chosen one.
                let u: f64 = rng.gen();
                let skip = ((1.0 - u).ln() / *log_q).floor();
                if !skip.is_finite() || skip >= (*end - *pos) as f64 {
                    *pos = *end;
                    return None;
                }
                let row = bits.select_from(*pos, skip as usize, *end)?;
                *pos = row + 1;
                Some(row)
            }
        }
    }
}
