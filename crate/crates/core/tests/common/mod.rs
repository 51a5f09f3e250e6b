#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizketch_core::{ColumnBuilder, Datum, Table, ValueKind};

pub fn table(cols: Vec<(&str, ValueKind, Vec<Datum>)>) -> Table {
    Table::new(
        cols.into_iter()
            .map(|(name, kind, values)| {
                let mut b = ColumnBuilder::new(name, kind);
                for v in &values {
                    b.push_datum(v);
                }
                b.finish()
            })
            .collect(),
    )
    .unwrap()
}

pub fn ints<'a>(name: &'a str, values: &[i64]) -> (&'a str, ValueKind, Vec<Datum>) {
    (name, ValueKind::Int, values.iter().map(|&v| Datum::Int(v)).collect())
}

pub fn floats<'a>(name: &'a str, values: &[f64]) -> (&'a str, ValueKind, Vec<Datum>) {
    (name, ValueKind::Float, values.iter().map(|&v| Datum::Float(v)).collect())
}

pub fn strs<'a>(name: &'a str, values: &[&str]) -> (&'a str, ValueKind, Vec<Datum>) {
    (
        name,
        ValueKind::Str,
        values.iter().map(|v| Datum::Str((*v).to_owned())).collect(),
    )
}

/// Columns `i` (int), `f` (float), `s` (string), `t` (timestamp), `g`
/// (low-cardinality string); roughly 5% of cells missing.
pub fn random_table(seed: u64, rows: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut i = ColumnBuilder::new("i", ValueKind::Int);
    let mut f = ColumnBuilder::new("f", ValueKind::Float);
    let mut s = ColumnBuilder::new("s", ValueKind::Str);
    let mut t = ColumnBuilder::new("t", ValueKind::Timestamp);
    let mut g = ColumnBuilder::new("g", ValueKind::Str);
    for _ in 0..rows {
        let miss = |rng: &mut ChaCha8Rng| rng.gen::<f64>() < 0.05;
        if miss(&mut rng) { i.push_missing() } else { i.push_int(rng.gen_range(0..100)) }
        if miss(&mut rng) {
            f.push_missing()
        } else {
            f.push_float(rng.gen::<f64>() * 50.0 - 10.0 + rng.gen::<f64>() * rng.gen::<f64>() * 30.0)
        }
        if miss(&mut rng) {
            s.push_missing()
        } else {
            let len = rng.gen_range(1..4);
            let word: String = (0..len).map(|_| rng.gen_range(b'a'..=b'h') as char).collect();
            s.push_str(&word);
        }
        if miss(&mut rng) {
            t.push_missing()
        } else {
            t.push_int(1_600_000_000_000 + rng.gen_range(0..86_400_000i64))
        }
        g.push_str(["red", "green", "blue"][rng.gen_range(0..3)]);
    }
    Table::new(vec![i.finish(), f.finish(), s.finish(), t.finish(), g.finish()]).unwrap()
}

/// Cuts the member rows into contiguous physical windows at the given points.
pub fn split(table: &Table, cuts: &[usize]) -> Vec<Table> {
    let mut bounds = vec![0];
    bounds.extend(cuts.iter().copied().filter(|&c| c < table.physical_rows()));
    bounds.push(table.physical_rows());
    bounds.sort_unstable();
    bounds.windows(2).map(|w| table.restrict(w[0]..w[1])).collect()
}

pub fn random_cuts(seed: u64, rows: usize, max_parts: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = rng.gen_range(1..=max_parts);
    (1..parts).map(|_| rng.gen_range(0..=rows)).collect()
}
