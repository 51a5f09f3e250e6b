use std::cmp::Ordering;
use std::collections::HashMap;

use crate::bitmap::Bitmap;
use crate::value::{Datum, Value, ValueKind};

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Int(Vec<i64>),
    Float(Vec<f64>),
    Timestamp(Vec<i64>),
    /// `dictionary` is sorted by byte order and duplicate-free.
    Str { codes: Vec<u32>, dictionary: Vec<String> },
}

/// An immutable typed column. Cells flagged in `missing` hold a zero
/// placeholder in `data`.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
    missing: Option<Bitmap>,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData, missing: Option<Bitmap>) -> Self {
        let col = Column {
            name: name.into(),
            data,
            missing: missing.filter(|m| m.count_ones() > 0),
        };
        if let ColumnData::Str { codes, dictionary } = &col.data {
            debug_assert!(dictionary.windows(2).all(|w| w[0] < w[1]));
            debug_assert!(codes.iter().all(|&c| (c as usize) < dictionary.len().max(1)));
        }
        col
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ValueKind {
        match self.data {
            ColumnData::Int(_) => ValueKind::Int,
            ColumnData::Float(_) => ValueKind::Float,
            ColumnData::Timestamp(_) => ValueKind::Timestamp,
            ColumnData::Str { .. } => ValueKind::Str,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Int(v) | ColumnData::Timestamp(v) => v.len(),
            ColumnData::Float(v) => v.len(),
            ColumnData::Str { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn is_missing(&self, row: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m.get(row))
    }

    pub fn missing_count(&self) -> usize {
        self.missing.as_ref().map_or(0, Bitmap::count_ones)
    }

    pub fn dictionary(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Str { dictionary, .. } => Some(dictionary),
            _ => None,
        }
    }

    #[inline]
    pub fn value(&self, row: usize) -> Value {
        if self.is_missing(row) {
            return Value::Missing;
        }
        match &self.data {
            ColumnData::Int(v) => Value::Int(v[row]),
            ColumnData::Float(v) => Value::Float(v[row]),
            ColumnData::Timestamp(v) => Value::Timestamp(v[row]),
            ColumnData::Str { codes, .. } => Value::Str(codes[row]),
        }
    }

    pub fn datum(&self, row: usize) -> Datum {
        match self.value(row) {
            Value::Missing => Datum::Missing,
            Value::Int(v) => Datum::Int(v),
            Value::Float(v) => Datum::Float(v),
            Value::Timestamp(v) => Datum::Timestamp(v),
            Value::Str(code) => Datum::Str(self.string(code).to_owned()),
        }
    }

    /// Numeric view of int, float and timestamp cells; `None` for missing
    /// cells and string columns.
    #[inline]
    pub fn numeric(&self, row: usize) -> Option<f64> {
        if self.is_missing(row) {
            return None;
        }
        match &self.data {
            ColumnData::Int(v) | ColumnData::Timestamp(v) => Some(v[row] as f64),
            ColumnData::Float(v) => Some(v[row]),
            ColumnData::Str { .. } => None,
        }
    }

    #[inline]
    pub fn code(&self, row: usize) -> Option<u32> {
        match &self.data {
            ColumnData::Str { codes, .. } if !self.is_missing(row) => Some(codes[row]),
            _ => None,
        }
    }

    pub fn string(&self, code: u32) -> &str {
        match &self.data {
            ColumnData::Str { dictionary, .. } => &dictionary[code as usize],
            _ => panic!("string() on a {} column", self.kind()),
        }
    }

    #[inline]
    pub fn str_at(&self, row: usize) -> Option<&str> {
        self.code(row).map(|c| self.string(c))
    }

    /// Compares the cell at `row` with `datum` under the engine's total order.
    pub fn cmp_datum(&self, row: usize, datum: &Datum) -> Ordering {
        match (self.value(row), datum) {
            (Value::Missing, Datum::Missing) => Ordering::Equal,
            (Value::Missing, _) => Ordering::Less,
            (_, Datum::Missing) => Ordering::Greater,
            (Value::Int(a), Datum::Int(b)) => a.cmp(b),
            (Value::Float(a), Datum::Float(b)) => a.total_cmp(b),
            (Value::Timestamp(a), Datum::Timestamp(b)) => a.cmp(b),
            (Value::Str(code), Datum::Str(b)) => self.string(code).as_bytes().cmp(b.as_bytes()),
            _ => self.datum(row).cmp(datum),
        }
    }

    /// Compares two cells of this column.
    #[inline]
    pub fn cmp_rows(&self, a: usize, b: usize) -> Ordering {
        match (self.value(a), self.value(b)) {
            (Value::Missing, Value::Missing) => Ordering::Equal,
            (Value::Missing, _) => Ordering::Less,
            (_, Value::Missing) => Ordering::Greater,
            (Value::Int(x), Value::Int(y)) | (Value::Timestamp(x), Value::Timestamp(y)) => x.cmp(&y),
            (Value::Float(x), Value::Float(y)) => x.total_cmp(&y),
            (Value::Str(x), Value::Str(y)) => x.cmp(&y),
            _ => Ordering::Equal,
        }
    }

    pub fn renamed(&self, name: impl Into<String>) -> Column {
        Column {
            name: name.into(),
            ..self.clone()
        }
    }
}

/// Accumulates cells of one kind and produces a `Column`. String cells are
/// interned and the dictionary is sorted when the column is finished.
pub struct ColumnBuilder {
    name: String,
    kind: ValueKind,
    ints: Vec<i64>,
    floats: Vec<f64>,
    codes: Vec<u32>,
    interner: HashMap<String, u32>,
    strings: Vec<String>,
    missing: Vec<usize>,
    len: usize,
}

impl ColumnBuilder {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        ColumnBuilder {
            name: name.into(),
            kind,
            ints: Vec::new(),
            floats: Vec::new(),
            codes: Vec::new(),
            interner: HashMap::new(),
            strings: Vec::new(),
            missing: Vec::new(),
            len: 0,
        }
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn push_missing(&mut self) {
        self.missing.push(self.len);
        match self.kind {
            ValueKind::Int | ValueKind::Timestamp => self.ints.push(0),
            ValueKind::Float => self.floats.push(0.0),
            ValueKind::Str => self.codes.push(0),
        }
        self.len += 1;
    }

    pub fn push_int(&mut self, v: i64) {
        debug_assert!(matches!(self.kind, ValueKind::Int | ValueKind::Timestamp));
        self.ints.push(v);
        self.len += 1;
    }

    /// Non-finite floats are stored as missing.
    pub fn push_float(&mut self, v: f64) {
        debug_assert_eq!(self.kind, ValueKind::Float);
        if v.is_finite() {
            self.floats.push(if v == 0.0 { 0.0 } else { v });
            self.len += 1;
        } else {
            self.push_missing();
        }
    }

    /// Empty strings are stored as missing.
    pub fn push_str(&mut self, s: &str) {
        debug_assert_eq!(self.kind, ValueKind::Str);
        if s.is_empty() {
            return self.push_missing();
        }
        let next = self.strings.len() as u32;
        let code = *self.interner.entry(s.to_owned()).or_insert_with(|| {
            self.strings.push(s.to_owned());
            next
        });
        self.codes.push(code);
        self.len += 1;
    }

    pub fn push_datum(&mut self, d: &Datum) {
        match (self.kind, d) {
            (_, Datum::Missing) => self.push_missing(),
            (ValueKind::Int, Datum::Int(v)) | (ValueKind::Timestamp, Datum::Timestamp(v)) => {
                self.push_int(*v)
            }
            (ValueKind::Float, Datum::Float(v)) => self.push_float(*v),
            (ValueKind::Float, Datum::Int(v)) => self.push_float(*v as f64),
            (ValueKind::Str, Datum::Str(s)) => self.push_str(s),
            (kind, d) => panic!("cannot store {d:?} in a {kind} column"),
        }
    }

    pub fn finish(self) -> Column {
        let missing = if self.missing.is_empty() {
            None
        } else {
            let mut bits = Bitmap::new(self.len);
            for &m in &self.missing {
                bits.set(m);
            }
            Some(bits)
        };
        let data = match self.kind {
            ValueKind::Int => ColumnData::Int(self.ints),
            ValueKind::Timestamp => ColumnData::Timestamp(self.ints),
            ValueKind::Float => ColumnData::Float(self.floats),
            ValueKind::Str => {
                let mut order: Vec<u32> = (0..self.strings.len() as u32).collect();
                order.sort_by(|&a, &b| self.strings[a as usize].cmp(&self.strings[b as usize]));
                let mut remap = vec![0u32; order.len()];
                for (new, &old) in order.iter().enumerate() {
                    remap[old as usize] = new as u32;
                }
                let mut strings = self.strings;
                let dictionary: Vec<String> =
                    order.iter().map(|&o| std::mem::take(&mut strings[o as usize])).collect();
                let codes = self
                    .codes
                    .into_iter()
                    .map(|c| remap.get(c as usize).copied().unwrap_or(0))
                    .collect();
                ColumnData::Str { codes, dictionary }
            }
        };
        Column::new(self.name, data, missing)
    }
}
