use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Int,
    Float,
    Timestamp,
    Str,
}

impl ValueKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ValueKind::Str)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Int => "int",
            ValueKind::Float => "float",
            ValueKind::Timestamp => "timestamp",
            ValueKind::Str => "str",
        };
        f.write_str(s)
    }
}

/// A cell as stored in a column. Strings are indexes into the column's
/// sorted dictionary, so comparing two `Str` values from the same column
/// compares the underlying strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    /// Milliseconds since the Unix epoch.
    Timestamp(i64),
    Str(u32),
    Missing,
}

/// An owned, self-describing cell used in summaries and requests, where
/// dictionary indexes from different shards cannot be compared.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Datum {
    Missing,
    Int(i64),
    Float(f64),
    Timestamp(i64),
    Str(String),
}

impl Datum {
    fn rank(&self) -> u8 {
        match self {
            Datum::Missing => 0,
            Datum::Int(_) => 1,
            Datum::Float(_) => 2,
            Datum::Timestamp(_) => 3,
            Datum::Str(_) => 4,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Datum::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Datum::Int(v) => Some(v as f64),
            Datum::Float(v) => Some(v),
            Datum::Timestamp(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Datum::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical text form, also used by CSV output and text search.
    pub fn to_text(&self) -> String {
        match self {
            Datum::Missing => String::new(),
            Datum::Int(v) => v.to_string(),
            Datum::Float(v) => v.to_string(),
            Datum::Timestamp(ms) => format_timestamp(*ms),
            Datum::Str(s) => s.clone(),
        }
    }
}

impl PartialEq for Datum {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Datum {}

impl PartialOrd for Datum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Missing sorts first; values of one kind use their natural order (floats by
/// `total_cmp`). Columns are homogeneous, so cross-kind order only needs to be
/// consistent.
impl Ord for Datum {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Datum::Int(a), Datum::Int(b)) => a.cmp(b),
            (Datum::Float(a), Datum::Float(b)) => a.total_cmp(b),
            (Datum::Timestamp(a), Datum::Timestamp(b)) => a.cmp(b),
            (Datum::Str(a), Datum::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Datum {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Datum::Missing => {}
            Datum::Int(v) | Datum::Timestamp(v) => v.hash(state),
            Datum::Float(v) => v.to_bits().hash(state),
            Datum::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn format_timestamp(ms: i64) -> String {
    match DateTime::<Utc>::from_timestamp_millis(ms) {
        Some(t) => t.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string(),
        None => ms.to_string(),
    }
}

/// Parses the ISO-8601 shapes accepted by ingestion into epoch milliseconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    if s.len() < 10 || !s.as_bytes()[0].is_ascii_digit() {
        return None;
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp_millis());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc().timestamp_millis())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_sorts_first() {
        let mut v = vec![Datum::Int(3), Datum::Missing, Datum::Int(-1)];
        v.sort();
        assert_eq!(v, vec![Datum::Missing, Datum::Int(-1), Datum::Int(3)]);
    }

    #[test]
    fn strings_use_byte_order() {
        assert!(Datum::Str("B".into()) < Datum::Str("a".into()));
        assert!(Datum::Str("ab".into()) < Datum::Str("b".into()));
    }

    #[test]
    fn timestamps_round_trip() {
        let ms = parse_timestamp("2019-03-04T05:06:07.089Z").unwrap();
        assert_eq!(format_timestamp(ms), "2019-03-04T05:06:07.089Z");
        assert_eq!(parse_timestamp(&format_timestamp(ms)), Some(ms));
        assert_eq!(parse_timestamp("2019-03-04"), Some(1_551_657_600_000));
        assert_eq!(parse_timestamp("12"), None);
        assert_eq!(parse_timestamp("hello world"), None);
    }
}
