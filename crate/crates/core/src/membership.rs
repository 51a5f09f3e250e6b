//! Membership sets select which physical rows of a shared column store belong
//! to a table.
//!
//! Dense sets are a bitmap (possibly viewed through a row window, which is how
//! micropartitions share their parent's bitmap); sparse sets are a sorted list
//! of row ids.

use std::ops::Range;
use std::sync::Arc;

use crate::bitmap::Bitmap;

/// Sets at or above this density (`size / universe`) use a bitmap.
pub const DENSE_THRESHOLD_DENOMINATOR: usize = 32;

#[derive(Clone, Debug)]
pub enum MembershipSet {
    Dense {
        bits: Arc<Bitmap>,
        window: Range<usize>,
        size: usize,
    },
    Sparse {
        rows: Arc<[u32]>,
        universe: usize,
    },
}

impl MembershipSet {
    /// Every row of a `universe`-row store.
    pub fn full(universe: usize) -> Self {
        MembershipSet::Dense {
            bits: Arc::new(Bitmap::full(universe)),
            window: 0..universe,
            size: universe,
        }
    }

    pub fn empty(universe: usize) -> Self {
        MembershipSet::Sparse {
            rows: Arc::from(Vec::new()),
            universe,
        }
    }

    /// Builds a set from strictly increasing row ids, choosing the
    /// representation by density.
    pub fn from_sorted_rows(rows: Vec<u32>, universe: usize) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(rows.last().is_none_or(|&r| (r as usize) < universe));
        if is_dense(rows.len(), universe) {
            let mut bits = Bitmap::new(universe);
            for &r in &rows {
                bits.set(r as usize);
            }
            MembershipSet::Dense {
                size: rows.len(),
                bits: Arc::new(bits),
                window: 0..universe,
            }
        } else {
            MembershipSet::Sparse {
                rows: Arc::from(rows),
                universe,
            }
        }
    }

    pub fn from_bitmap(bits: Bitmap) -> Self {
        let universe = bits.len();
        let size = bits.count_ones();
        if is_dense(size, universe) {
            MembershipSet::Dense {
                bits: Arc::new(bits),
                window: 0..universe,
                size,
            }
        } else {
            let rows: Vec<u32> = bits.iter_range(0, universe).map(|r| r as u32).collect();
            MembershipSet::Sparse {
                rows: Arc::from(rows),
                universe,
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            MembershipSet::Dense { size, .. } => *size,
            MembershipSet::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn universe(&self) -> usize {
        match self {
            MembershipSet::Dense { bits, .. } => bits.len(),
            MembershipSet::Sparse { universe, .. } => *universe,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, MembershipSet::Dense { .. })
    }

    pub fn contains(&self, row: usize) -> bool {
        match self {
            MembershipSet::Dense { bits, window, .. } => window.contains(&row) && bits.get(row),
            MembershipSet::Sparse { rows, .. } => rows.binary_search(&(row as u32)).is_ok(),
        }
    }

    /// Member rows in increasing order.
    pub fn iter(&self) -> MemberIter<'_> {
        match self {
            MembershipSet::Dense { bits, window, .. } => {
                MemberIter::Dense(bits.iter_range(window.start, window.end))
            }
            MembershipSet::Sparse { rows, .. } => MemberIter::Sparse(rows.iter()),
        }
    }

    /// Restricts the set to rows in `range`, sharing the bitmap when dense.
    pub fn restrict(&self, range: Range<usize>) -> MembershipSet {
        match self {
            MembershipSet::Dense { bits, window, .. } => {
                let start = range.start.max(window.start);
                let end = range.end.min(window.end).max(start);
                MembershipSet::Dense {
                    size: bits.count_range(start, end),
                    bits: Arc::clone(bits),
                    window: start..end,
                }
            }
            MembershipSet::Sparse { rows, universe } => {
                let lo = rows.partition_point(|&r| (r as usize) < range.start);
                let hi = rows.partition_point(|&r| (r as usize) < range.end);
                MembershipSet::Sparse {
                    rows: Arc::from(&rows[lo..hi.max(lo)]),
                    universe: *universe,
                }
            }
        }
    }

    /// Members for which `keep` holds, re-choosing the representation.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> MembershipSet {
        let universe = self.universe();
        let rows: Vec<u32> = self.iter().filter(|&r| keep(r)).map(|r| r as u32).collect();
        MembershipSet::from_sorted_rows(rows, universe)
    }

    /// The row window a dense set iterates over, or the bounding range of a sparse set.
    pub fn span(&self) -> Range<usize> {
        match self {
            MembershipSet::Dense { window, .. } => window.clone(),
            MembershipSet::Sparse { rows, .. } => match (rows.first(), rows.last()) {
                (Some(&a), Some(&b)) => a as usize..b as usize + 1,
                _ => 0..0,
            },
        }
    }
}

impl PartialEq for MembershipSet {
    fn eq(&self, other: &Self) -> bool {
        self.universe() == other.universe()
            && self.size() == other.size()
            && self.iter().eq(other.iter())
    }
}

fn is_dense(size: usize, universe: usize) -> bool {
    universe > 0 && size * DENSE_THRESHOLD_DENOMINATOR >= universe
}

pub enum MemberIter<'a> {
    Dense(crate::bitmap::OnesIter<'a>),
    Sparse(std::slice::Iter<'a, u32>),
}

impl Iterator for MemberIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            MemberIter::Dense(it) => it.next(),
            MemberIter::Sparse(it) => it.next().map(|&r| r as usize),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_rule_picks_representation() {
        let dense = MembershipSet::from_sorted_rows((0..10).collect(), 320);
        assert!(dense.is_dense());
        let sparse = MembershipSet::from_sorted_rows((0..9).collect(), 320);
        assert!(!sparse.is_dense());
        assert_eq!(sparse.size(), 9);
    }

    #[test]
    fn restrict_shares_bitmap_and_counts() {
        let full = MembershipSet::full(1000);
        let part = full.restrict(100..250);
        assert_eq!(part.size(), 150);
        assert_eq!(part.iter().next(), Some(100));
        assert_eq!(part.iter().last(), Some(249));
        if let (MembershipSet::Dense { bits: a, .. }, MembershipSet::Dense { bits: b, .. }) =
            (&full, &part)
        {
            assert!(Arc::ptr_eq(a, b));
        } else {
            panic!("expected dense sets");
        }
        assert!(!part.contains(99));
        assert!(part.contains(100));
    }

    #[test]
    fn sparse_restrict_and_contains() {
        let s = MembershipSet::from_sorted_rows(vec![3, 50, 700, 999], 100_000);
        assert!(s.contains(700));
        assert!(!s.contains(701));
        let r = s.restrict(4..800);
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![50, 700]);
    }

    #[test]
    fn filter_matches_scan() {
        let s = MembershipSet::full(5000);
        let f = s.filter(|r| r % 3 == 0);
        assert_eq!(f.size(), (0..5000).filter(|r| r % 3 == 0).count());
        assert!(f.iter().all(|r| r % 3 == 0));
        let g = f.filter(|r| r < 30);
        assert!(!g.is_dense());
        assert_eq!(g.iter().collect::<Vec<_>>(), vec![0, 3, 6, 9, 12, 15, 18, 21, 24, 27]);
    }
}
