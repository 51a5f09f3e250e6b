//! The preparation round: data-wide parameters (ranges, string bucket
//! boundaries, population, trellis groups) a rendering request needs
//! before it can run.

use vizketch_core::sketch::distinct::{is_complete, string_boundaries};
use vizketch_core::sketch::request::{MAX_STACK_COLORS, MAX_STRING_BUCKETS};
use vizketch_core::sketch::{BucketSpec, MomentsSummary, StringQuantiles};
use vizketch_core::{Datum, Schema, SketchKind, SketchRequest, Summary, ValueKind};

use crate::error::{EngineError, Result};

/// Bars a histogram shows when the request leaves it open.
pub const DEFAULT_MAX_BUCKETS: u32 = 50;

/// Seed for preparation sketches; fixed so their results are cacheable.
pub const PREPARATION_SEED: u64 = 0;

/// Runs one preparation sketch to completion.
pub type Round<'a> = dyn FnMut(SketchRequest) -> Result<Summary> + 'a;

pub fn moments_request(column: &str) -> SketchRequest {
    SketchRequest::new(SketchKind::Moments, &[column])
}

pub fn string_quantiles_request(column: &str) -> SketchRequest {
    let mut r = SketchRequest::new(SketchKind::StringQuantiles, &[column]);
    r.seed = PREPARATION_SEED;
    r
}

/// Whether `req` needs a preparation round at all.
pub fn needs_preparation(req: &SketchRequest) -> bool {
    let wants_population = req.kind.may_sample() && req.population.is_none() && !req.full_scan;
    match req.kind {
        SketchKind::Histogram | SketchKind::HistogramExact | SketchKind::Cdf => req.x.is_none() || wants_population,
        SketchKind::Stacked | SketchKind::NormalizedStacked | SketchKind::Heatmap => {
            req.x.is_none() || req.y.is_none() || wants_population
        }
        SketchKind::Trellis => {
            req.x.is_none() || (req.columns.len() > 2 && req.y.is_none()) || req.groups.is_empty() || wants_population
        }
        SketchKind::Pca => wants_population && req.sample_size.is_some(),
        _ => wants_population,
    }
}

struct Prep<'r, 'a> {
    schema: &'r Schema,
    run: &'r mut Round<'a>,
    rows: Option<u64>,
}

impl Prep<'_, '_> {
    fn moments(&mut self, column: &str) -> Result<MomentsSummary> {
        match (self.run)(moments_request(column))? {
            Summary::Moments(m) => {
                self.rows = Some(m.rows());
                Ok(m)
            }
            other => Err(EngineError::Protocol(format!("moments returned {}", other.variant_name()))),
        }
    }

    fn strings(&mut self, column: &str) -> Result<StringQuantiles> {
        match (self.run)(string_quantiles_request(column))? {
            Summary::StringQuantiles(q) => {
                self.rows = Some(q.rows + q.missing);
                Ok(q)
            }
            other => Err(EngineError::Protocol(format!("string quantiles returned {}", other.variant_name()))),
        }
    }

    fn axis(&mut self, column: &str, count: u32) -> Result<BucketSpec> {
        let count = count.max(1);
        if self.schema.kind_of(column)?.is_numeric() {
            let m = self.moments(column)?;
            let (min, max) = match (m.min, m.max) {
                (Some(a), Some(b)) => (a, b),
                _ => (0.0, 1.0),
            };
            Ok(BucketSpec::Numeric { min, max, count })
        } else {
            let q = self.strings(column)?;
            string_boundaries(&q, (count as usize).min(MAX_STRING_BUCKETS))
                .ok_or_else(|| EngineError::BadRequest(format!("column `{column}` has no values")))
        }
    }

    fn population(&mut self, column: &str) -> Result<u64> {
        if let Some(r) = self.rows {
            return Ok(r);
        }
        if self.schema.kind_of(column)? == ValueKind::Str {
            self.strings(column)?;
        } else {
            self.moments(column)?;
        }
        Ok(self.rows.unwrap_or(0))
    }
}

fn bars(req: &SketchRequest) -> u32 {
    req.buckets.unwrap_or(req.pixels.width.min(DEFAULT_MAX_BUCKETS))
}

/// Fills in whatever `req` leaves open, running preparation sketches
/// through `run`.
pub fn complete_request(req: &SketchRequest, schema: &Schema, run: &mut Round<'_>) -> Result<SketchRequest> {
    let mut out = req.clone();
    let mut p = Prep { schema, run, rows: None };
    let col = |i: usize| req.column(i).map(str::to_owned).map_err(EngineError::from);
    let (bx, by) = req.heatmap_dims();
    match req.kind {
        SketchKind::Histogram | SketchKind::HistogramExact => {
            if out.x.is_none() {
                out.x = Some(p.axis(&col(0)?, bars(req))?);
            }
        }
        SketchKind::Cdf => {
            if out.x.is_none() {
                out.x = Some(p.axis(&col(0)?, req.pixels.width)?);
            }
        }
        SketchKind::Stacked | SketchKind::NormalizedStacked => {
            if out.x.is_none() {
                out.x = Some(p.axis(&col(0)?, bars(req))?);
            }
            if out.y.is_none() {
                let colors = req.buckets_y.unwrap_or(req.colors).min(MAX_STACK_COLORS);
                out.y = Some(p.axis(&col(1)?, colors)?);
            }
        }
        SketchKind::Heatmap => {
            if out.x.is_none() {
                out.x = Some(p.axis(&col(0)?, bx)?);
            }
            if out.y.is_none() {
                out.y = Some(p.axis(&col(1)?, by)?);
            }
        }
        SketchKind::Trellis => {
            let heat = req.columns.len() > 2;
            if out.x.is_none() {
                out.x = Some(p.axis(&col(0)?, if heat { bx } else { bars(req) })?);
            }
            if heat && out.y.is_none() {
                out.y = Some(p.axis(&col(1)?, by)?);
            }
            if out.groups.is_empty() {
                let g = req.columns.last().cloned().unwrap_or_default();
                if schema.kind_of(&g)? != ValueKind::Str {
                    return Err(EngineError::BadRequest(format!("list the trellis groups of numeric column `{g}`")));
                }
                let q = p.strings(&g)?;
                if !is_complete(&q) || q.sample.len() > MAX_STRING_BUCKETS {
                    return Err(EngineError::BadRequest(format!("column `{g}` has too many values to group by")));
                }
                let mut values: Vec<String> = q.sample.into_iter().map(|(_, s)| s).collect();
                values.sort();
                out.groups = values.into_iter().map(Datum::Str).collect();
            }
        }
        _ => {}
    }
    let wants_population = out.kind.may_sample() && out.population.is_none() && !out.full_scan;
    if wants_population && (out.kind != SketchKind::Pca || out.sample_size.is_some()) {
        let first = req
            .columns
            .first()
            .or(req.sort_order.first().map(|k| &k.column))
            .cloned()
            .ok_or_else(|| EngineError::BadRequest("request names no columns".into()))?;
        out.population = Some(p.population(&first)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vizketch_core::table::ColumnDesc;

    fn schema() -> Schema {
        Schema(vec![
            ColumnDesc { name: "n".into(), kind: ValueKind::Float },
            ColumnDesc { name: "s".into(), kind: ValueKind::Str },
        ])
    }

    fn fake(req: SketchRequest) -> Result<Summary> {
        Ok(match req.kind {
            SketchKind::Moments => {
                let mut m = match vizketch_core::identity(&req)? {
                    Summary::Moments(m) => m,
                    _ => unreachable!(),
                };
                m.min = Some(-2.0);
                m.max = Some(8.0);
                m.count = 90;
                m.missing = 10;
                Summary::Moments(m)
            }
            SketchKind::StringQuantiles => {
                let mut q = match vizketch_core::identity(&req)? {
                    Summary::StringQuantiles(q) => q,
                    _ => unreachable!(),
                };
                q.sample = vec![(1, "b".into()), (2, "a".into())];
                q.min = Some("a".into());
                q.max = Some("b".into());
                q.rows = 40;
                q.missing = 2;
                Summary::StringQuantiles(q)
            }
            _ => unreachable!(),
        })
    }

    #[test]
    fn numeric_histogram_gets_range_and_population() {
        let req = SketchRequest::new(SketchKind::Histogram, &["n"]);
        assert!(needs_preparation(&req));
        let mut calls = Vec::new();
        let out = complete_request(&req, &schema(), &mut |r| {
            calls.push(r.kind);
            fake(r)
        })
        .unwrap();
        assert_eq!(out.x, Some(BucketSpec::Numeric { min: -2.0, max: 8.0, count: 50 }));
        assert_eq!(out.population, Some(100));
        assert_eq!(calls, [SketchKind::Moments]);
        assert!(!needs_preparation(&out));
    }

    #[test]
    fn string_axis_uses_quantiles() {
        let mut req = SketchRequest::new(SketchKind::HistogramExact, &["s"]);
        req.buckets = Some(10);
        let out = complete_request(&req, &schema(), &mut fake).unwrap();
        assert_eq!(out.x, Some(BucketSpec::Strings { boundaries: vec!["a".into(), "b".into()] }));
        assert_eq!(out.population, None);
    }

    #[test]
    fn trellis_groups_from_distinct_strings() {
        let req = SketchRequest::new(SketchKind::Trellis, &["n", "s"]);
        let out = complete_request(&req, &schema(), &mut fake).unwrap();
        assert_eq!(out.groups, vec![Datum::Str("a".into()), Datum::Str("b".into())]);
        assert!(out.population.is_some());
    }

    #[test]
    fn complete_requests_pass_through() {
        let mut req = SketchRequest::new(SketchKind::HistogramExact, &["n"]);
        req.x = Some(BucketSpec::Numeric { min: 0.0, max: 1.0, count: 3 });
        assert!(!needs_preparation(&req));
        let out = complete_request(&req, &schema(), &mut |_| panic!("no round expected")).unwrap();
        assert_eq!(out, req);
    }
}
