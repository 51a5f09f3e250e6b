//! Turns summaries into pixel-space payloads, so clients draw without
//! doing any arithmetic on counts.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use vizketch_core::sketch::heavy::reported;
use vizketch_core::sketch::pca::pca;
use vizketch_core::sketch::rows::quantile_row;
use vizketch_core::sketch::{distinct, BucketSpec};
use vizketch_core::sketch::summary::{BucketCounts, HeatmapCounts, TrellisInner};
use vizketch_core::value::format_timestamp;
use vizketch_core::{Datum, SketchKind, SketchRequest, Summary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub values: Vec<Json>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyRow {
    pub value: Json,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum Payload {
    /// Bar heights in `0..=height`; the tallest bar is exactly `height`.
    Histogram {
        x: Option<BucketSpec>,
        bars: Vec<u32>,
        counts: Vec<u64>,
        height: u32,
        sampled_n: u64,
        population: u64,
    },
    /// One non-decreasing value in `0..=height` per horizontal pixel, and the
    /// fractions they were rounded from.
    Cdf {
        x: Option<BucketSpec>,
        pixels: Vec<u32>,
        fractions: Vec<f64>,
        height: u32,
        sampled_n: u64,
    },
    /// `segments[i]` splits `bars[i]` by the y buckets; the segments of a bar
    /// add up to at most the bar.
    Stacked {
        x: Option<BucketSpec>,
        y: Option<BucketSpec>,
        normalized: bool,
        bars: Vec<u32>,
        segments: Vec<Vec<u32>>,
        height: u32,
        sampled_n: u64,
    },
    /// Row-major `bx × by` color levels in `0..colors`; empty cells are null.
    Heatmap {
        x: Option<BucketSpec>,
        y: Option<BucketSpec>,
        bx: u32,
        by: u32,
        colors: u32,
        log_scale: bool,
        cells: Vec<Option<u32>>,
        max_count: u64,
        sampled_n: u64,
    },
    /// One chart per group, all drawn to the same scale.
    Trellis { groups: Vec<Json>, charts: Vec<Payload> },
    Table { columns: Vec<String>, ascending: Vec<bool>, rows: Vec<TableRow> },
    /// The row a scroll bar position lands on.
    ScrollTarget { columns: Vec<String>, row: Option<Vec<Json>> },
    HeavyHitters { rows: Vec<HeavyRow>, n_processed: u64, sampled: bool },
    Moments { min: Option<f64>, max: Option<f64>, count: u64, missing: u64, mean: Option<f64>, stddev: Option<f64> },
    Distinct { estimate: f64 },
    StringQuantiles { min: Option<String>, max: Option<String>, sample: Vec<String>, complete: bool, rows: u64, missing: u64 },
    Pca { columns: Vec<String>, correlation: Vec<Vec<f64>>, eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>> },
    Saved { rows_written: u64, errors: Vec<String> },
}

#[derive(Debug, thiserror::Error)]
#[error("a {summary} summary cannot be rendered as {kind}")]
pub struct RenderError {
    pub summary: &'static str,
    pub kind: SketchKind,
}

pub fn datum_json(d: &Datum) -> Json {
    match d {
        Datum::Missing => Json::Null,
        Datum::Int(v) => Json::from(*v),
        Datum::Float(v) => Json::from(*v),
        Datum::Timestamp(ms) => Json::from(format_timestamp(*ms)),
        Datum::Str(s) => Json::from(s.as_str()),
    }
}

fn scaled(count: u64, scale: f64) -> u32 {
    (count as f64 * scale).round() as u32
}

/// Heights with `max` drawn as `height` pixels; all zero when `max` is 0.
pub fn bar_heights(counts: &[u64], max: u64, height: u32) -> Vec<u32> {
    if max == 0 {
        return vec![0; counts.len()];
    }
    let scale = height as f64 / max as f64;
    counts.iter().map(|&c| scaled(c, scale).min(height)).collect()
}

/// Color level of each cell: `colors` equal slices of `(0, max]`, or of
/// `(0, ln(1 + max)]` on a log scale.
pub fn color_levels(cells: &[u64], max: u64, colors: u32, log_scale: bool) -> Vec<Option<u32>> {
    let colors = colors.max(1);
    let f = |c: u64| if log_scale { (c as f64).ln_1p() } else { c as f64 };
    let top = f(max);
    cells
        .iter()
        .map(|&c| {
            (c > 0).then(|| {
                let level = (f(c) / top * colors as f64).ceil() as u32;
                level.clamp(1, colors) - 1
            })
        })
        .collect()
}

/// Splits a bar into segments whose boundaries are rounded cumulatively,
/// so segment heights add up to the rounded stack height.
fn segments(fine: &[u64], scale: f64) -> Vec<u32> {
    let mut out = Vec::with_capacity(fine.len());
    let mut sum = 0;
    let mut prev = 0;
    for &c in fine {
        sum += c;
        let top = scaled(sum, scale);
        out.push(top - prev);
        prev = top;
    }
    out
}

fn histogram(b: &BucketCounts, x: Option<BucketSpec>, max: u64, height: u32) -> Payload {
    Payload::Histogram {
        x,
        bars: bar_heights(&b.counts, max, height),
        counts: b.counts.clone(),
        height,
        sampled_n: b.sampled_n,
        population: b.population,
    }
}

fn heatmap(h: &HeatmapCounts, req: &SketchRequest, max: u64) -> Payload {
    Payload::Heatmap {
        x: req.x.clone(),
        y: req.y.clone(),
        bx: h.bx,
        by: h.by,
        colors: req.colors.max(1),
        log_scale: req.log_scale,
        cells: color_levels(&h.cells, max, req.colors, req.log_scale),
        max_count: max,
        sampled_n: h.sampled_n,
    }
}

fn expected(kind: SketchKind) -> &'static str {
    match kind {
        SketchKind::Histogram | SketchKind::HistogramExact => "buckets",
        SketchKind::Cdf => "cdf",
        SketchKind::Stacked | SketchKind::NormalizedStacked => "stacked",
        SketchKind::Heatmap => "heatmap",
        SketchKind::Trellis => "trellis",
        SketchKind::NextItems | SketchKind::FindText => "top_k",
        SketchKind::Quantile => "sampled_rows",
        SketchKind::HeavyHittersMg | SketchKind::HeavyHittersSampled => "heavy_hitters",
        SketchKind::Moments => "moments",
        SketchKind::DistinctCount => "distinct",
        SketchKind::StringQuantiles => "string_quantiles",
        SketchKind::Pca => "correlation",
        SketchKind::SaveTable => "write",
    }
}

/// Renders `summary`, the answer to `req`, for a `req.pixels` chart.
pub fn render_payload(summary: &Summary, req: &SketchRequest) -> Result<Payload, RenderError> {
    if summary.variant_name() != expected(req.kind) {
        return Err(RenderError { summary: summary.variant_name(), kind: req.kind });
    }
    let height = req.pixels.height;
    Ok(match summary {
        Summary::Buckets(b) => histogram(b, req.x.clone(), b.counts.iter().copied().max().unwrap_or(0), height),
        Summary::Cdf(c) => {
            let mut sum = 0;
            let cumulative: Vec<u64> = c.counts.iter().map(|&k| {
                sum += k;
                sum
            }).collect();
            let fractions: Vec<f64> = if c.sampled_n == 0 {
                vec![0.0; cumulative.len()]
            } else {
                cumulative.iter().map(|&k| k as f64 / c.sampled_n as f64).collect()
            };
            Payload::Cdf {
                x: req.x.clone(),
                pixels: fractions.iter().map(|f| ((f * height as f64).round() as u32).min(height)).collect(),
                fractions,
                height,
                sampled_n: c.sampled_n,
            }
        }
        Summary::Stacked(s) => {
            let by = s.by as usize;
            let normalized = req.kind == SketchKind::NormalizedStacked;
            let max = s.coarse.iter().copied().max().unwrap_or(0);
            let mut bars = Vec::with_capacity(s.coarse.len());
            let mut segs = Vec::with_capacity(s.coarse.len());
            for (i, &c) in s.coarse.iter().enumerate() {
                let denominator = if normalized { c } else { max };
                let scale = if denominator == 0 { 0.0 } else { height as f64 / denominator as f64 };
                bars.push(scaled(c, scale).min(height));
                segs.push(segments(&s.fine[i * by..(i + 1) * by], scale));
            }
            Payload::Stacked {
                x: req.x.clone(),
                y: req.y.clone(),
                normalized,
                bars,
                segments: segs,
                height,
                sampled_n: s.sampled_n,
            }
        }
        Summary::Heatmap(h) => heatmap(h, req, h.cells.iter().copied().max().unwrap_or(0)),
        Summary::Trellis(t) => {
            let max = t
                .groups
                .iter()
                .flat_map(|g| match g {
                    TrellisInner::Histogram(b) => b.counts.iter(),
                    TrellisInner::Heatmap(h) => h.cells.iter(),
                })
                .copied()
                .max()
                .unwrap_or(0);
            let charts = t
                .groups
                .iter()
                .map(|g| match g {
                    TrellisInner::Histogram(b) => histogram(b, req.x.clone(), max, height),
                    TrellisInner::Heatmap(h) => heatmap(h, req, max),
                })
                .collect();
            Payload::Trellis { groups: req.groups.iter().map(datum_json).collect(), charts }
        }
        Summary::TopK(t) => Payload::Table {
            columns: t.columns.clone(),
            ascending: t.ascending.clone(),
            rows: t
                .rows
                .iter()
                .map(|r| TableRow { values: r.values.iter().map(datum_json).collect(), count: r.count })
                .collect(),
        },
        Summary::SampledRows(s) => Payload::ScrollTarget {
            columns: s.columns.clone(),
            row: quantile_row(s, req.scroll_position, height).map(|r| r.iter().map(datum_json).collect()),
        },
        Summary::HeavyHitters(h) => Payload::HeavyHitters {
            rows: reported(h)
                .iter()
                .map(|(v, c)| HeavyRow {
                    value: datum_json(v),
                    count: *c,
                    fraction: if h.n_processed == 0 { 0.0 } else { *c as f64 / h.n_processed as f64 },
                })
                .collect(),
            n_processed: h.n_processed,
            sampled: h.sampled,
        },
        Summary::Moments(m) => {
            let mean = m.mean();
            let stddev = match (mean, m.sums.get(1)) {
                (Some(mu), Some(s2)) => Some((s2.value() / m.count as f64 - mu * mu).max(0.0).sqrt()),
                _ => None,
            };
            Payload::Moments { min: m.min, max: m.max, count: m.count, missing: m.missing, mean, stddev }
        }
        Summary::Distinct(d) => Payload::Distinct { estimate: distinct::estimate(d) },
        Summary::StringQuantiles(q) => {
            let mut sample: Vec<String> = q.sample.iter().map(|(_, s)| s.clone()).collect();
            sample.sort();
            Payload::StringQuantiles {
                min: q.min.clone(),
                max: q.max.clone(),
                complete: distinct::is_complete(q),
                sample,
                rows: q.rows,
                missing: q.missing,
            }
        }
        Summary::Correlation(c) => {
            let r = pca(c, c.columns.len());
            Payload::Pca { columns: r.columns, correlation: r.correlation, eigenvalues: r.eigenvalues, eigenvectors: r.eigenvectors }
        }
        Summary::Write(w) => Payload::Saved { rows_written: w.rows_written, errors: w.errors.clone() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vizketch_core::sketch::summary::{CdfCounts, StackedCounts};

    fn buckets(counts: &[u64]) -> Summary {
        Summary::Buckets(BucketCounts { counts: counts.to_vec(), sampled_n: counts.iter().sum(), population: 0 })
    }

    fn hist_req(height: u32) -> SketchRequest {
        let mut r = SketchRequest::new(SketchKind::Histogram, &["x"]);
        r.pixels.height = height;
        r
    }

    #[test]
    fn tallest_bar_fills_the_chart() {
        let Payload::Histogram { bars, .. } = render_payload(&buckets(&[1, 2]), &hist_req(100)).unwrap() else {
            panic!()
        };
        assert_eq!(bars, [50, 100]);
    }

    #[test]
    fn empty_histogram_is_flat() {
        let Payload::Histogram { bars, .. } = render_payload(&buckets(&[0, 0, 0]), &hist_req(100)).unwrap() else {
            panic!()
        };
        assert_eq!(bars, [0, 0, 0]);
    }

    #[test]
    fn densest_cell_gets_the_last_color() {
        let mut req = SketchRequest::new(SketchKind::Heatmap, &["x", "y"]);
        req.colors = 20;
        let s = Summary::Heatmap(HeatmapCounts { bx: 2, by: 2, cells: vec![0, 1, 10, 20], sampled_n: 31 });
        let Payload::Heatmap { cells, .. } = render_payload(&s, &req).unwrap() else { panic!() };
        assert_eq!(cells, [None, Some(0), Some(9), Some(19)]);
        req.log_scale = true;
        let Payload::Heatmap { cells, .. } = render_payload(&s, &req).unwrap() else { panic!() };
        assert_eq!(cells[3], Some(19));
        assert!(cells[1].unwrap() < cells[2].unwrap());
    }

    #[test]
    fn cdf_accumulates_over_the_sample() {
        let mut req = SketchRequest::new(SketchKind::Cdf, &["x"]);
        req.pixels.height = 10;
        let s = Summary::Cdf(CdfCounts { counts: vec![1, 0, 2, 1], sampled_n: 4, population: 4 });
        let Payload::Cdf { pixels, fractions, .. } = render_payload(&s, &req).unwrap() else { panic!() };
        assert_eq!(fractions, [0.25, 0.25, 0.75, 1.0]);
        assert_eq!(pixels, [3, 3, 8, 10]);
    }

    #[test]
    fn stacked_segments_fill_their_bars() {
        let mut req = SketchRequest::new(SketchKind::Stacked, &["x", "y"]);
        req.pixels.height = 90;
        let s = Summary::Stacked(StackedCounts { coarse: vec![3, 1], fine: vec![1, 1, 1, 0, 1, 0], by: 3, sampled_n: 4 });
        let Payload::Stacked { bars, segments, .. } = render_payload(&s, &req).unwrap() else { panic!() };
        assert_eq!(bars, [90, 30]);
        assert_eq!(segments, [vec![30, 30, 30], vec![0, 30, 0]]);
        req.kind = SketchKind::NormalizedStacked;
        let Payload::Stacked { bars, segments, .. } = render_payload(&s, &req).unwrap() else { panic!() };
        assert_eq!(bars, [90, 90]);
        assert_eq!(segments[1], [0, 90, 0]);
    }

    #[test]
    fn mismatched_summary_is_an_error() {
        let req = SketchRequest::new(SketchKind::Cdf, &["x"]);
        assert!(render_payload(&buckets(&[1]), &req).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pixels_stay_in_bounds(counts in prop::collection::vec(0u64..1_000_000, 1..60), height in 1u32..500, colors in 1u32..40, log in any::<bool>()) {
                let req = hist_req(height);
                let Payload::Histogram { bars, .. } = render_payload(&buckets(&counts), &req).unwrap() else { panic!() };
                prop_assert!(bars.iter().all(|&b| b <= height));
                let n: u64 = counts.iter().sum();
                let mut cdf = SketchRequest::new(SketchKind::Cdf, &["x"]);
                cdf.pixels.height = height;
                let s = Summary::Cdf(CdfCounts { counts: counts.clone(), sampled_n: n, population: n });
                let Payload::Cdf { pixels, .. } = render_payload(&s, &cdf).unwrap() else { panic!() };
                prop_assert!(pixels.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(pixels.iter().all(|&p| p <= height));
                let max = counts.iter().copied().max().unwrap();
                let levels = color_levels(&counts, max, colors, log);
                prop_assert!(levels.iter().flatten().all(|&l| l < colors));
                // Same input, same bytes.
                let a = serde_json::to_string(&render_payload(&s, &cdf).unwrap()).unwrap();
                let b = serde_json::to_string(&render_payload(&s, &cdf).unwrap()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
