//! Tabular-view sketches: next items after a row, text search, and the
//! sampled rows behind the scroll bar.

use std::cmp::Ordering;

use regex::{Regex, RegexBuilder};

use super::request::{Search, SearchMode, SketchRequest};
use super::summary::{RowSnapshot, SampledRows, TopKRows};
use super::Rows;
use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::hash::{hash_row, mix64};
use crate::table::Table;
use crate::value::{Datum, Value};

/// Projected columns: the sort columns first, then the request's other
/// columns in ascending order.
pub(crate) fn projected_columns(req: &SketchRequest) -> (Vec<String>, Vec<bool>) {
    let mut names: Vec<String> = req.sort_order.iter().map(|k| k.column.clone()).collect();
    let mut ascending: Vec<bool> = req.sort_order.iter().map(|k| k.ascending).collect();
    for c in &req.columns {
        if !names.contains(c) {
            names.push(c.clone());
            ascending.push(true);
        }
    }
    (names, ascending)
}

struct Projection<'a> {
    columns: Vec<&'a Column>,
    ascending: Vec<bool>,
}

impl<'a> Projection<'a> {
    fn new(table: &'a Table, req: &SketchRequest) -> Result<Self> {
        let (names, ascending) = projected_columns(req);
        let columns = names
            .iter()
            .map(|n| table.column(n).map(|c| c.as_ref()))
            .collect::<Result<_>>()?;
        Ok(Projection { columns, ascending })
    }

    fn cmp_rows(&self, a: usize, b: usize) -> Ordering {
        for (c, &asc) in self.columns.iter().zip(&self.ascending) {
            let o = c.cmp_rows(a, b);
            if o != Ordering::Equal {
                return if asc { o } else { o.reverse() };
            }
        }
        Ordering::Equal
    }

    /// Compares a row with a (possibly shorter) prefix of projected values.
    fn cmp_prefix(&self, row: usize, prefix: &[Datum]) -> Ordering {
        for ((c, &asc), d) in self.columns.iter().zip(&self.ascending).zip(prefix) {
            let o = c.cmp_datum(row, d);
            if o != Ordering::Equal {
                return if asc { o } else { o.reverse() };
            }
        }
        Ordering::Equal
    }

    fn snapshot(&self, row: usize) -> Vec<Datum> {
        self.columns.iter().map(|c| c.datum(row)).collect()
    }
}

pub(crate) fn cmp_values(a: &[Datum], b: &[Datum], ascending: &[bool]) -> Ordering {
    for ((x, y), &asc) in a.iter().zip(b).zip(ascending) {
        let o = x.cmp(y);
        if o != Ordering::Equal {
            return if asc { o } else { o.reverse() };
        }
    }
    a.len().cmp(&b.len())
}

/// Text matching for find; case-insensitive modes lowercase both sides.
pub(crate) struct Matcher {
    mode: SearchMode,
    text: String,
    case_sensitive: bool,
    regex: Option<Regex>,
}

impl Matcher {
    pub fn new(search: &Search) -> Result<Matcher> {
        let regex = match search.mode {
            SearchMode::Regex => Some(
                RegexBuilder::new(&search.text)
                    .case_insensitive(!search.case_sensitive)
                    .build()?,
            ),
            _ => None,
        };
        let text = if search.case_sensitive {
            search.text.clone()
        } else {
            search.text.to_lowercase()
        };
        Ok(Matcher {
            mode: search.mode,
            text,
            case_sensitive: search.case_sensitive,
            regex,
        })
    }

    pub fn matches(&self, s: &str) -> bool {
        if let Some(re) = &self.regex {
            return re.is_match(s);
        }
        let folded;
        let s = if self.case_sensitive {
            s
        } else {
            folded = s.to_lowercase();
            &folded
        };
        match self.mode {
            SearchMode::Exact => s == self.text,
            SearchMode::Substring => s.contains(self.text.as_str()),
            SearchMode::Regex => unreachable!("regex handled above"),
        }
    }
}

/// Row filter for find: a row matches if any projected column's text does.
struct RowMatcher<'a> {
    matcher: Matcher,
    columns: Vec<(&'a Column, Option<Vec<bool>>)>,
}

impl<'a> RowMatcher<'a> {
    fn new(projection: &Projection<'a>, search: &Search) -> Result<Self> {
        let matcher = Matcher::new(search)?;
        let columns = projection
            .columns
            .iter()
            .map(|c| {
                let by_code = c
                    .dictionary()
                    .map(|d| d.iter().map(|s| matcher.matches(s)).collect());
                (*c, by_code)
            })
            .collect();
        Ok(RowMatcher { matcher, columns })
    }

    fn matches(&self, row: usize) -> bool {
        self.columns.iter().any(|(c, by_code)| match (by_code, c.value(row)) {
            (_, Value::Missing) => false,
            (Some(codes), Value::Str(code)) => codes[code as usize],
            _ => self.matcher.matches(&c.datum(row).to_text()),
        })
    }
}

pub(crate) fn top_k_identity(req: &SketchRequest) -> TopKRows {
    let (columns, ascending) = projected_columns(req);
    TopKRows {
        columns,
        ascending,
        k: req.top_k,
        rows: Vec::new(),
    }
}

/// The `K` smallest distinct projected rows strictly after `start_row`,
/// restricted to rows matching the search when one is given.
pub(crate) fn next_items(table: &Table, req: &SketchRequest, search: Option<&Search>) -> Result<TopKRows> {
    let proj = Projection::new(table, req)?;
    let matcher = search.map(|s| RowMatcher::new(&proj, s)).transpose()?;
    let k = req.top_k as usize;
    let start = req.start_row.as_deref();
    let mut kept: Vec<(usize, u64)> = Vec::new();
    let mut buffer: Vec<usize> = Vec::new();
    let cap = (4 * k).max(1024);

    let compact = |kept: &mut Vec<(usize, u64)>, buffer: &mut Vec<usize>| {
        let mut all: Vec<(usize, u64)> = kept.drain(..).chain(buffer.drain(..).map(|r| (r, 1))).collect();
        all.sort_by(|a, b| proj.cmp_rows(a.0, b.0));
        for (row, count) in all {
            match kept.last_mut() {
                Some(last) if proj.cmp_rows(last.0, row) == Ordering::Equal => last.1 += count,
                _ => {
                    if kept.len() == k {
                        break;
                    }
                    kept.push((row, count));
                }
            }
        }
    };

    if k > 0 {
        for row in table.members().iter() {
            if let Some(r) = start {
                if proj.cmp_prefix(row, r) != Ordering::Greater {
                    continue;
                }
            }
            if kept.len() == k {
                if let Some(&(last, _)) = kept.last() {
                    if proj.cmp_rows(row, last) == Ordering::Greater {
                        continue;
                    }
                }
            }
            if let Some(m) = &matcher {
                if !m.matches(row) {
                    continue;
                }
            }
            buffer.push(row);
            if buffer.len() >= cap {
                compact(&mut kept, &mut buffer);
            }
        }
        compact(&mut kept, &mut buffer);
    }
    let mut out = top_k_identity(req);
    out.rows = kept
        .into_iter()
        .map(|(row, count)| RowSnapshot {
            values: proj.snapshot(row),
            count,
        })
        .collect();
    Ok(out)
}

pub(crate) fn merge_top_k(a: &TopKRows, b: &TopKRows) -> Result<TopKRows> {
    if a.columns != b.columns || a.ascending != b.ascending || a.k != b.k {
        return Err(CoreError::invalid("row summaries differ in projection"));
    }
    let mut all: Vec<&RowSnapshot> = a.rows.iter().chain(&b.rows).collect();
    all.sort_by(|x, y| cmp_values(&x.values, &y.values, &a.ascending));
    let mut rows: Vec<RowSnapshot> = Vec::new();
    for r in all {
        match rows.last_mut() {
            Some(last) if last.values == r.values => last.count += r.count,
            _ => {
                if rows.len() == a.k as usize {
                    break;
                }
                rows.push(r.clone());
            }
        }
    }
    Ok(TopKRows {
        rows,
        ..a.clone()
    })
}

pub(crate) fn sampled_rows_identity(req: &SketchRequest, capacity: u64) -> SampledRows {
    let (columns, ascending) = projected_columns(req);
    SampledRows {
        columns,
        ascending,
        items: Vec::new(),
        capacity,
        sampled_n: 0,
    }
}

/// Sampled rows with a random priority each; compaction keeps the lowest
/// priorities, which is a uniform subsample.
pub(crate) fn sampled_rows(
    table: &Table,
    req: &SketchRequest,
    rows: Rows,
    seed: u64,
    capacity: u64,
) -> Result<SampledRows> {
    let proj = Projection::new(table, req)?;
    let priority_seed = mix64(seed ^ 0x7072_696f_7269_7479);
    let mut out = sampled_rows_identity(req, capacity);
    for row in rows {
        out.sampled_n += 1;
        out.items.push((hash_row(priority_seed, row as u64), proj.snapshot(row)));
    }
    compact_sampled(&mut out);
    Ok(out)
}

fn compact_sampled(s: &mut SampledRows) {
    let asc = s.ascending.clone();
    s.items
        .sort_by(|a, b| a.0.cmp(&b.0).then_with(|| cmp_values(&a.1, &b.1, &asc)));
    s.items.truncate(s.capacity as usize);
}

pub(crate) fn merge_sampled(a: &SampledRows, b: &SampledRows) -> Result<SampledRows> {
    if a.columns != b.columns || a.ascending != b.ascending || a.capacity != b.capacity {
        return Err(CoreError::invalid("sampled rows differ in projection"));
    }
    let mut out = SampledRows {
        items: a.items.iter().chain(&b.items).cloned().collect(),
        sampled_n: a.sampled_n + b.sampled_n,
        ..a.clone()
    };
    compact_sampled(&mut out);
    Ok(out)
}

/// The sampled row whose relative rank is nearest `position / height`.
pub fn quantile_row(s: &SampledRows, position: u32, height: u32) -> Option<Vec<Datum>> {
    if s.items.is_empty() {
        return None;
    }
    let mut values: Vec<&Vec<Datum>> = s.items.iter().map(|(_, v)| v).collect();
    values.sort_by(|a, b| cmp_values(a, b, &s.ascending));
    let len = values.len() as u64;
    let idx = (position as u64 * len / height.max(1) as u64).min(len - 1);
    Some(values[idx as usize].clone())
}
