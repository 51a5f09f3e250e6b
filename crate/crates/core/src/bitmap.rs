/// Fixed-length bitmap over row ids.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn new(len: usize) -> Self {
        Bitmap {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        Bitmap { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i >> 6] & (1 << (i & 63)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] |= 1 << (i & 63);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits in `[start, end)`.
    pub fn count_range(&self, start: usize, end: usize) -> usize {
        if start >= end {
            return 0;
        }
        let (sw, ew) = (start >> 6, (end - 1) >> 6);
        let head_mask = u64::MAX << (start & 63);
        let tail_mask = u64::MAX >> (63 - ((end - 1) & 63));
        if sw == ew {
            return (self.words[sw] & head_mask & tail_mask).count_ones() as usize;
        }
        let mut total = (self.words[sw] & head_mask).count_ones() as usize;
        total += self.words[sw + 1..ew]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        total + (self.words[ew] & tail_mask).count_ones() as usize
    }

    /// Iterates the set bits in `[start, end)` in increasing order.
    pub fn iter_range(&self, start: usize, end: usize) -> OnesIter<'_> {
        let end = end.min(self.len);
        let mut it = OnesIter {
            words: &self.words,
            word_idx: start >> 6,
            current: 0,
            end,
        };
        if start < end {
            it.current = self.words[start >> 6] & (u64::MAX << (start & 63));
        } else {
            it.word_idx = self.words.len();
        }
        it
    }

    /// Position of the `k`-th (0-based) set bit at or after `from`, bounded by `end`.
    pub fn select_from(&self, from: usize, mut k: usize, end: usize) -> Option<usize> {
        if from >= end {
            return None;
        }
        let mut wi = from >> 6;
        let mut word = self.words[wi] & (u64::MAX << (from & 63));
        loop {
            let ones = word.count_ones() as usize;
            if k < ones {
                let pos = (wi << 6) + select_in_word(word, k);
                return (pos < end).then_some(pos);
            }
            k -= ones;
            wi += 1;
            if wi >= self.words.len() || (wi << 6) >= end {
                return None;
            }
            word = self.words[wi];
        }
    }
}

#[inline]
fn select_in_word(mut word: u64, k: usize) -> usize {
    for _ in 0..k {
        word &= word - 1;
    }
    word.trailing_zeros() as usize
}

pub struct OnesIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    end: usize,
}

impl Iterator for OnesIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let pos = (self.word_idx << 6) + bit;
                if pos >= self.end {
                    self.word_idx = self.words.len();
                    self.current = 0;
                    return None;
                }
                return Some(pos);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() || (self.word_idx << 6) >= self.end {
                self.word_idx = self.words.len();
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bitmap() -> Bitmap {
        let mut b = Bitmap::new(300);
        for i in (0..300).filter(|i| i % 7 == 0 || i % 11 == 3) {
            b.set(i);
        }
        b
    }

    #[test]
    fn full_has_exact_length() {
        let b = Bitmap::full(130);
        assert_eq!(b.count_ones(), 130);
        assert_eq!(b.iter_range(0, 130).last(), Some(129));
    }

    #[test]
    fn range_ops_match_scan() {
        let b = sample_bitmap();
        for (s, e) in [(0, 300), (5, 64), (63, 65), (64, 128), (100, 101), (129, 299), (10, 10)] {
            let brute: Vec<usize> = (s..e).filter(|&i| b.get(i)).collect();
            assert_eq!(b.iter_range(s, e).collect::<Vec<_>>(), brute, "{s}..{e}");
            assert_eq!(b.count_range(s, e), brute.len());
            for k in 0..brute.len() + 2 {
                assert_eq!(b.select_from(s, k, e), brute.get(k).copied(), "{s}..{e} k={k}");
            }
        }
    }
}
