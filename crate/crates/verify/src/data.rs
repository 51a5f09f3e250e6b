//! Seeded data generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use vizketch_core::{ColumnBuilder, Table, ValueKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A bimodal column with a long right tail, shaped like delay data.
pub fn mixture(seed: u64, rows: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let early = Normal::new(30.0, 8.0).unwrap();
    let late = Normal::new(70.0, 5.0).unwrap();
    (0..rows)
        .map(|_| {
            let u: f64 = r.gen();
            if u < 0.55 {
                early.sample(&mut r)
            } else if u < 0.9 {
                late.sample(&mut r)
            } else {
                40.0 + r.gen::<f64>().powi(3) * 120.0
            }
        })
        .collect()
}

pub fn float_table(name: &str, values: &[f64]) -> Table {
    let mut b = ColumnBuilder::new(name, ValueKind::Float);
    for &v in values {
        b.push_float(v);
    }
    Table::new(vec![b.finish()]).unwrap()
}

pub fn int_table(name: &str, values: &[i64]) -> Table {
    let mut b = ColumnBuilder::new(name, ValueKind::Int);
    for &v in values {
        b.push_int(v);
    }
    Table::new(vec![b.finish()]).unwrap()
}

pub fn str_table(name: &str, values: &[String]) -> Table {
    let mut b = ColumnBuilder::new(name, ValueKind::Str);
    for v in values {
        b.push_str(v);
    }
    Table::new(vec![b.finish()]).unwrap()
}

/// The ranks `1..=n` in shuffled order.
pub fn shuffled_ranks(seed: u64, n: usize) -> Vec<i64> {
    let mut v: Vec<i64> = (1..=n as i64).collect();
    v.shuffle(&mut rng(seed));
    v
}

/// Values with planted frequencies. `heavy` gives `(name, fraction)` pairs;
/// the remaining mass is spread evenly over `light` values named `l0..`.
pub fn planted(seed: u64, rows: usize, heavy: &[(&str, f64)], light: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(rows);
    for (name, f) in heavy {
        out.extend(std::iter::repeat_n((*name).to_owned(), (f * rows as f64).round() as usize));
    }
    let mut i = 0;
    while out.len() < rows {
        out.push(format!("l{}", i % light));
        i += 1;
    }
    out.truncate(rows);
    out.shuffle(&mut rng(seed));
    out
}

/// Streams that stress frequent-item counters: random Zipf draws,
/// round-robin over `k + 1` values, sorted runs and a late heavy value.
pub fn counter_stream(seed: u64, k: usize) -> Vec<i64> {
    let mut r = rng(seed);
    let n = r.gen_range(500..5_000);
    match seed % 4 {
        0 => {
            let z = Zipf::new(500, 1.1).unwrap();
            (0..n).map(|_| z.sample(&mut r) as i64).collect()
        }
        1 => (0..n).map(|i| (i % (k + 1)) as i64).collect(),
        2 => {
            let mut v: Vec<i64> = (0..n).map(|_| r.gen_range(0..(2 * k as i64))).collect();
            v.sort_unstable();
            v
        }
        _ => {
            let distinct = n / 2;
            let mut v: Vec<i64> = (0..distinct as i64).collect();
            v.extend(std::iter::repeat_n(-1, n - distinct));
            v
        }
    }
}

/// A mixed-type table: `i` int, `f` float, `s` short strings, `t`
/// timestamps, `g` three categories; about 5% of cells missing.
pub fn random_table(seed: u64, rows: usize) -> Table {
    let mut r = rng(seed);
    let mut i = ColumnBuilder::new("i", ValueKind::Int);
    let mut f = ColumnBuilder::new("f", ValueKind::Float);
    let mut s = ColumnBuilder::new("s", ValueKind::Str);
    let mut t = ColumnBuilder::new("t", ValueKind::Timestamp);
    let mut g = ColumnBuilder::new("g", ValueKind::Str);
    for _ in 0..rows {
        let mut missing = || r.gen::<f64>() < 0.05;
        let (mi, mf, ms, mt) = (missing(), missing(), missing(), missing());
        if mi { i.push_missing() } else { i.push_int(r.gen_range(-50..1_000)) }
        if mf { f.push_missing() } else { f.push_float(r.gen::<f64>() * 200.0 - 20.0) }
        if ms {
            s.push_missing()
        } else {
            let len = r.gen_range(1..4);
            let w: String = (0..len).map(|_| r.gen_range(b'a'..=b'j') as char).collect();
            s.push_str(&w);
        }
        if mt { t.push_missing() } else { t.push_int(1_700_000_000_000 + r.gen_range(0..86_400_000)) }
        g.push_str(["north", "south", "west"][r.gen_range(0..3)]);
    }
    Table::new(vec![i.finish(), f.finish(), s.finish(), t.finish(), g.finish()]).unwrap()
}

/// Up to `max_parts` contiguous windows over the rows, some possibly empty.
pub fn random_split(seed: u64, table: &Table, max_parts: usize) -> Vec<Table> {
    let mut r = rng(seed ^ 0x5eed);
    let rows = table.physical_rows();
    let parts = r.gen_range(1..=max_parts);
    let mut cuts: Vec<usize> = (1..parts).map(|_| r.gen_range(0..=rows)).collect();
    cuts.push(0);
    cuts.push(rows);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| table.restrict(w[0]..w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn planted_values_have_their_frequencies() {
        let v = planted(1, 1_000, &[("a", 0.2), ("b", 0.15)], 4);
        let count = |x: &str| v.iter().filter(|s| *s == x).count();
        assert_eq!((count("a"), count("b")), (200, 150));
        assert_eq!((0..4).map(|i| count(&format!("l{i}"))).sum::<usize>(), 650);
    }

    #[test]
    fn ranks_are_a_permutation() {
        let mut r = shuffled_ranks(3, 500);
        assert_ne!(r, (1..=500).collect::<Vec<_>>());
        r.sort_unstable();
        assert_eq!(r, (1..=500).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn splits_cover_every_row_once(seed in any::<u64>(), rows in 0usize..300, parts in 1usize..9) {
            let t = random_table(seed, rows);
            let pieces = random_split(seed, &t, parts);
            prop_assert!(pieces.len() <= parts);
            let glued: Vec<_> = pieces.iter().flat_map(|p| p.rows_as_data()).collect();
            prop_assert_eq!(format!("{glued:?}"), format!("{:?}", t.rows_as_data()));
        }
    }
}
