//! Counting sketches: histograms, CDFs, stacked histograms, heat maps and
//! trellis plots. All of them bucket (possibly sampled) rows and add counts
//! on merge.

use std::collections::HashMap;

use super::request::{BucketSpec, SketchKind, SketchRequest};
use super::summary::{
    add_vectors, BucketCounts, CdfCounts, HeatmapCounts, StackedCounts, TrellisCounts, TrellisInner,
};
use super::Rows;
use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::table::Table;
use crate::value::{Datum, Value};

/// Maps a column's cells to bucket indexes.
pub(crate) struct Axis<'a> {
    column: &'a Column,
    map: AxisMap,
}

enum AxisMap {
    Numeric(BucketSpec),
    /// Bucket per dictionary code of a string column.
    Codes(Vec<Option<u32>>),
}

impl<'a> Axis<'a> {
    pub fn new(table: &'a Table, name: &str, spec: &BucketSpec) -> Result<Axis<'a>> {
        let column = table.column(name)?.as_ref();
        let map = match (spec, column.dictionary()) {
            (BucketSpec::Numeric { .. }, None) => AxisMap::Numeric(spec.clone()),
            (BucketSpec::Strings { .. }, Some(dict)) => AxisMap::Codes(
                dict.iter()
                    .map(|s| spec.index_str(s).map(|i| i as u32))
                    .collect(),
            ),
            (BucketSpec::Numeric { .. }, Some(_)) => {
                return Err(CoreError::kind_mismatch(name, "numeric", column.kind()))
            }
            (BucketSpec::Strings { .. }, None) => {
                return Err(CoreError::kind_mismatch(name, "str", column.kind()))
            }
        };
        Ok(Axis { column, map })
    }

    /// `None` for a missing cell, `Some(None)` for a value outside the buckets.
    #[inline]
    pub fn bucket(&self, row: usize) -> Option<Option<usize>> {
        match &self.map {
            AxisMap::Numeric(spec) => self.column.numeric(row).map(|v| spec.index_f64(v)),
            AxisMap::Codes(codes) => self
                .column
                .code(row)
                .map(|c| codes[c as usize].map(|b| b as usize)),
        }
    }
}

pub(crate) fn histogram(table: &Table, req: &SketchRequest, rows: Rows) -> Result<BucketCounts> {
    let spec = req.x_spec()?;
    let axis = Axis::new(table, req.column(0)?, spec)?;
    let mut counts = vec![0u64; spec.count()];
    let mut sampled_n = 0;
    for row in rows {
        if let Some(b) = axis.bucket(row) {
            sampled_n += 1;
            if let Some(b) = b {
                counts[b] += 1;
            }
        }
    }
    Ok(BucketCounts {
        counts,
        sampled_n,
        population: population(table, req),
    })
}

fn population(table: &Table, _req: &SketchRequest) -> u64 {
    table.member_count() as u64
}

/// The pixel intervals of a CDF: one bucket per horizontal pixel.
pub(crate) fn cdf_spec(req: &SketchRequest) -> Result<BucketSpec> {
    match req.x_spec()? {
        BucketSpec::Numeric { min, max, .. } => Ok(BucketSpec::Numeric {
            min: *min,
            max: *max,
            count: req.pixels.width,
        }),
        BucketSpec::Strings { .. } => Err(CoreError::invalid("cdf needs a numeric range")),
    }
}

pub(crate) fn cdf(table: &Table, req: &SketchRequest, rows: Rows) -> Result<CdfCounts> {
    let spec = cdf_spec(req)?;
    if let BucketSpec::Numeric { min, max, .. } = spec {
        if min >= max {
            return Err(CoreError::invalid(format!("cdf range [{min}, {max}) is empty")));
        }
    }
    let axis = Axis::new(table, req.column(0)?, &spec)?;
    let mut counts = vec![0u64; spec.count()];
    let mut sampled_n = 0;
    for row in rows {
        if let Some(b) = axis.bucket(row) {
            sampled_n += 1;
            if let Some(b) = b {
                counts[b] += 1;
            }
        }
    }
    Ok(CdfCounts {
        counts,
        sampled_n,
        population: population(table, req),
    })
}

pub(crate) fn stacked(table: &Table, req: &SketchRequest, rows: Rows) -> Result<StackedCounts> {
    let (xs, ys) = (req.x_spec()?, req.y_spec()?);
    let x = Axis::new(table, req.column(0)?, xs)?;
    let y = Axis::new(table, req.column(1)?, ys)?;
    let (bx, by) = (xs.count(), ys.count());
    let mut coarse = vec![0u64; bx];
    let mut fine = vec![0u64; bx * by];
    let mut sampled_n = 0;
    for row in rows {
        let (Some(a), Some(b)) = (x.bucket(row), y.bucket(row)) else {
            continue;
        };
        sampled_n += 1;
        if let (Some(i), Some(j)) = (a, b) {
            coarse[i] += 1;
            fine[i * by + j] += 1;
        }
    }
    Ok(StackedCounts {
        coarse,
        fine,
        by: by as u32,
        sampled_n,
    })
}

pub(crate) fn heatmap(table: &Table, req: &SketchRequest, rows: Rows) -> Result<HeatmapCounts> {
    let (xs, ys) = (req.x_spec()?, req.y_spec()?);
    let x = Axis::new(table, req.column(0)?, xs)?;
    let y = Axis::new(table, req.column(1)?, ys)?;
    let mut h = empty_heatmap(xs.count(), ys.count());
    for row in rows {
        add_point(&mut h, &x, &y, row);
    }
    Ok(h)
}

fn empty_heatmap(bx: usize, by: usize) -> HeatmapCounts {
    HeatmapCounts {
        bx: bx as u32,
        by: by as u32,
        cells: vec![0; bx * by],
        sampled_n: 0,
    }
}

#[inline]
fn add_point(h: &mut HeatmapCounts, x: &Axis, y: &Axis, row: usize) {
    if let (Some(a), Some(b)) = (x.bucket(row), y.bucket(row)) {
        h.sampled_n += 1;
        if let (Some(i), Some(j)) = (a, b) {
            h.cells[i * h.by as usize + j] += 1;
        }
    }
}

/// Trellis columns are `[x, w]` (histograms) or `[x, y, w]` (heat maps)
/// where `w` selects the group.
pub(crate) fn trellis(table: &Table, req: &SketchRequest, rows: Rows) -> Result<TrellisCounts> {
    let xs = req.x_spec()?;
    let x = Axis::new(table, req.column(0)?, xs)?;
    let y = match &req.y {
        Some(ys) => Some(Axis::new(table, req.column(1)?, ys)?),
        None => None,
    };
    let w = table.column(req.column(if y.is_some() { 2 } else { 1 })?)?;
    let lookup = GroupLookup::new(w, &req.groups);
    let mut out = trellis_identity(req)?;
    for row in rows {
        let Some(g) = lookup.group(row) else { continue };
        match (&mut out.groups[g], &y) {
            (TrellisInner::Heatmap(h), Some(y)) => add_point(h, &x, y, row),
            (TrellisInner::Histogram(b), None) => {
                if let Some(bucket) = x.bucket(row) {
                    b.sampled_n += 1;
                    if let Some(i) = bucket {
                        b.counts[i] += 1;
                    }
                }
            }
            _ => unreachable!("inner kind follows the y axis"),
        }
    }
    for g in &mut out.groups {
        if let TrellisInner::Histogram(b) = g {
            b.population = population(table, req);
        }
    }
    Ok(out)
}

struct GroupLookup<'a> {
    column: &'a Column,
    by_code: Option<Vec<Option<usize>>>,
    by_value: HashMap<Datum, usize>,
}

impl<'a> GroupLookup<'a> {
    fn new(column: &'a Column, groups: &[Datum]) -> Self {
        let mut by_value = HashMap::new();
        for (i, g) in groups.iter().enumerate() {
            by_value.entry(g.clone()).or_insert(i);
        }
        let by_code = column.dictionary().map(|dict| {
            dict.iter()
                .map(|s| by_value.get(&Datum::Str(s.clone())).copied())
                .collect()
        });
        GroupLookup {
            column,
            by_code,
            by_value,
        }
    }

    fn group(&self, row: usize) -> Option<usize> {
        match (&self.by_code, self.column.value(row)) {
            (_, Value::Missing) => None,
            (Some(codes), Value::Str(c)) => codes[c as usize],
            (_, Value::Int(v)) => self
                .by_value
                .get(&Datum::Int(v))
                .or_else(|| self.by_value.get(&Datum::Float(v as f64)))
                .copied(),
            (_, Value::Float(v)) => self.by_value.get(&Datum::Float(v)).copied(),
            (_, Value::Timestamp(v)) => self
                .by_value
                .get(&Datum::Timestamp(v))
                .or_else(|| self.by_value.get(&Datum::Int(v)))
                .copied(),
            (None, Value::Str(_)) => None,
        }
    }
}

pub(crate) fn trellis_identity(req: &SketchRequest) -> Result<TrellisCounts> {
    let bx = req.x_spec()?.count();
    let inner = match &req.y {
        Some(ys) => TrellisInner::Heatmap(empty_heatmap(bx, ys.count())),
        None => TrellisInner::Histogram(BucketCounts {
            counts: vec![0; bx],
            sampled_n: 0,
            population: 0,
        }),
    };
    Ok(TrellisCounts {
        groups: vec![inner; req.groups.len()],
    })
}

pub(crate) fn identity(req: &SketchRequest) -> Result<super::Summary> {
    use super::Summary;
    let pop = 0;
    Ok(match req.kind {
        SketchKind::Histogram | SketchKind::HistogramExact => Summary::Buckets(BucketCounts {
            counts: vec![0; req.x_spec()?.count()],
            sampled_n: 0,
            population: pop,
        }),
        SketchKind::Cdf => Summary::Cdf(CdfCounts {
            counts: vec![0; req.pixels.width as usize],
            sampled_n: 0,
            population: pop,
        }),
        SketchKind::Stacked | SketchKind::NormalizedStacked => {
            let (bx, by) = (req.x_spec()?.count(), req.y_spec()?.count());
            Summary::Stacked(StackedCounts {
                coarse: vec![0; bx],
                fine: vec![0; bx * by],
                by: by as u32,
                sampled_n: 0,
            })
        }
        SketchKind::Heatmap => Summary::Heatmap(empty_heatmap(req.x_spec()?.count(), req.y_spec()?.count())),
        SketchKind::Trellis => Summary::Trellis(trellis_identity(req)?),
        _ => unreachable!("not a counting sketch"),
    })
}

pub(crate) fn merge_buckets(a: &BucketCounts, b: &BucketCounts) -> Result<BucketCounts> {
    Ok(BucketCounts {
        counts: add_vectors(&a.counts, &b.counts)?,
        sampled_n: a.sampled_n + b.sampled_n,
        population: a.population + b.population,
    })
}

pub(crate) fn merge_cdf(a: &CdfCounts, b: &CdfCounts) -> Result<CdfCounts> {
    Ok(CdfCounts {
        counts: add_vectors(&a.counts, &b.counts)?,
        sampled_n: a.sampled_n + b.sampled_n,
        population: a.population + b.population,
    })
}

pub(crate) fn merge_stacked(a: &StackedCounts, b: &StackedCounts) -> Result<StackedCounts> {
    if a.by != b.by {
        return Err(CoreError::invalid("stacked histograms differ in subdivisions"));
    }
    Ok(StackedCounts {
        coarse: add_vectors(&a.coarse, &b.coarse)?,
        fine: add_vectors(&a.fine, &b.fine)?,
        by: a.by,
        sampled_n: a.sampled_n + b.sampled_n,
    })
}

pub(crate) fn merge_heatmap(a: &HeatmapCounts, b: &HeatmapCounts) -> Result<HeatmapCounts> {
    if (a.bx, a.by) != (b.bx, b.by) {
        return Err(CoreError::invalid("heat maps differ in shape"));
    }
    Ok(HeatmapCounts {
        bx: a.bx,
        by: a.by,
        cells: add_vectors(&a.cells, &b.cells)?,
        sampled_n: a.sampled_n + b.sampled_n,
    })
}

pub(crate) fn merge_trellis(a: &TrellisCounts, b: &TrellisCounts) -> Result<TrellisCounts> {
    if a.groups.len() != b.groups.len() {
        return Err(CoreError::invalid("trellis plots differ in group count"));
    }
    let groups = a
        .groups
        .iter()
        .zip(&b.groups)
        .map(|pair| match pair {
            (TrellisInner::Histogram(x), TrellisInner::Histogram(y)) => {
                merge_buckets(x, y).map(TrellisInner::Histogram)
            }
            (TrellisInner::Heatmap(x), TrellisInner::Heatmap(y)) => {
                merge_heatmap(x, y).map(TrellisInner::Heatmap)
            }
            _ => Err(CoreError::invalid("trellis inner kinds differ")),
        })
        .collect::<Result<_>>()?;
    Ok(TrellisCounts { groups })
}
