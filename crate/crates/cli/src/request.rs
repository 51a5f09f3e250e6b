//! Command-line flags to client messages.

use vizketch_core::io::FileFormat;
use vizketch_core::sketch::request::{OutputSpec, Pixels, Search, SearchMode, SortKey};
use vizketch_core::sketch::BucketSpec;
use vizketch_core::{Datum, SketchKind, SketchRequest};
use vizketch_engine::{LineageOp, Source};
use vizketch_server::ClientMessage;

use crate::args::{Command, DeriveArgs, Format, LoadArgs, Mode, QueryArgs};
use crate::error::{CliError, Result};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn format(f: Format) -> FileFormat {
    match f {
        Format::Csv => FileFormat::Csv,
        Format::Jsonl => FileFormat::Jsonl,
    }
}

pub fn source(a: &LoadArgs) -> Source {
    Source {
        format: a.format.map(format),
        schema: a.schema.clone(),
        delimiter: a.delimiter,
        header: !a.no_header,
        ..Source::new(a.source.clone())
    }
}

pub fn derive(a: &DeriveArgs) -> Result<ClientMessage> {
    let parent = a.dataset.clone();
    let op = match (&a.filter, &a.map) {
        (Some(predicate), None) => LineageOp::Filter { parent, predicate: predicate.clone() },
        (None, Some(expr)) => LineageOp::MapColumn {
            parent,
            expr: expr.clone(),
            name: a.name.clone().ok_or_else(|| usage("--map needs --name"))?,
        },
        _ => return Err(usage("give exactly one of --filter and --map")),
    };
    Ok(ClientMessage::Derive { op, seed: a.seed })
}

/// The sketch kind a query subcommand asks for.
pub fn kind(command: &Command) -> Result<Option<(SketchKind, &QueryArgs)>> {
    Ok(Some(match command {
        Command::Hist { q, exact } => (if *exact { SketchKind::HistogramExact } else { SketchKind::Histogram }, q),
        Command::Cdf(q) => (SketchKind::Cdf, q),
        Command::Heatmap(q) => (SketchKind::Heatmap, q),
        Command::Stacked { q, normalized } => {
            (if *normalized { SketchKind::NormalizedStacked } else { SketchKind::Stacked }, q)
        }
        Command::Trellis(q) => (SketchKind::Trellis, q),
        Command::Tail(q) => (SketchKind::NextItems, q),
        Command::Scroll(q) => (SketchKind::Quantile, q),
        Command::Find(q) => (SketchKind::FindText, q),
        Command::Heavy { q, mg } => (if *mg { SketchKind::HeavyHittersMg } else { SketchKind::HeavyHittersSampled }, q),
        Command::Distinct(q) => (SketchKind::DistinctCount, q),
        Command::Moments(q) => (SketchKind::Moments, q),
        Command::Pca(q) => (SketchKind::Pca, q),
        Command::Save(q) => (SketchKind::SaveTable, q),
        Command::Query { kind, q } => (kind.parse().map_err(|e: vizketch_core::CoreError| usage(e.to_string()))?, q),
        _ => return Ok(None),
    }))
}

fn range(text: &str, flag: &str) -> Result<(f64, f64)> {
    let bad = || usage(format!("{flag} expects MIN:MAX, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn axis(range_text: &Option<String>, strings: &[String], count: u32, flag: &str) -> Result<Option<BucketSpec>> {
    match (range_text, strings.is_empty()) {
        (Some(_), false) => Err(usage(format!("{flag}: give a range or strings, not both"))),
        (Some(r), true) => {
            let (min, max) = range(r, flag)?;
            Ok(Some(BucketSpec::Numeric { min, max, count }))
        }
        (None, false) => Ok(Some(BucketSpec::Strings { boundaries: strings.to_vec() })),
        (None, true) => Ok(None),
    }
}

fn data(text: &str, flag: &str) -> Result<Vec<Datum>> {
    serde_json::from_str(text).map_err(|e| usage(format!("{flag}: {e}")))
}

/// Builds the request; flags override the fields of `--request`.
pub fn request(kind: SketchKind, q: &QueryArgs) -> Result<SketchRequest> {
    let mut r = match &q.request {
        Some(json) => serde_json::from_str(json).map_err(|e| usage(format!("--request: {e}")))?,
        None => SketchRequest::default(),
    };
    r.kind = kind;
    if !q.columns.is_empty() {
        r.columns = q.columns.clone();
    }
    if let Some(p) = &q.pixels {
        let bad = || usage(format!("--pixels expects WIDTHxHEIGHT, got `{p}`"));
        let (w, h) = p.split_once('x').ok_or_else(bad)?;
        r.pixels = Pixels { width: w.parse().map_err(|_| bad())?, height: h.parse().map_err(|_| bad())? };
    }
    r.buckets = q.buckets.or(r.buckets);
    r.buckets_y = q.buckets_y.or(r.buckets_y);
    let x_count = r.buckets.unwrap_or(if kind == SketchKind::Cdf { r.pixels.width } else { r.pixels.width.min(50) });
    if let Some(x) = axis(&q.x_range, &q.x_strings, x_count, "--x-range")? {
        r.x = Some(x);
    }
    if let Some(y) = axis(&q.y_range, &q.y_strings, r.buckets_y.unwrap_or(r.pixels.height.min(50)), "--y-range")? {
        r.y = Some(y);
    }
    if let Some(c) = q.colors {
        r.colors = c;
    }
    if let Some(g) = &q.groups {
        r.groups = if g.trim_start().starts_with('[') {
            data(g, "--groups")?
        } else {
            g.split(',').map(|v| Datum::Str(v.to_owned())).collect()
        };
    }
    if let Some(d) = q.delta {
        r.delta = d;
    }
    if let Some(k) = q.top_k {
        r.top_k = k;
    }
    if let Some(m) = q.moments {
        r.moments = m;
    }
    if !q.sort_order.is_empty() {
        r.sort_order = q
            .sort_order
            .iter()
            .map(|s| match s.rsplit_once(':') {
                Some((c, "desc")) => SortKey { column: c.to_owned(), ascending: false },
                Some((c, "asc")) => SortKey { column: c.to_owned(), ascending: true },
                _ => SortKey { column: s.clone(), ascending: true },
            })
            .collect();
    }
    if let Some(text) = &q.search {
        let mode = match q.search_mode {
            Mode::Exact => SearchMode::Exact,
            Mode::Substring => SearchMode::Substring,
            Mode::Regex => SearchMode::Regex,
        };
        r.search = Some(Search { text: text.clone(), mode, case_sensitive: q.case_sensitive });
    }
    if let Some(row) = &q.start_row {
        r.start_row = Some(data(row, "--start-row")?);
    }
    if let Some(p) = q.scroll_position {
        r.scroll_position = p;
    }
    r.seed = match (q.seed, &q.request) {
        (Some(s), _) => s,
        (None, Some(_)) => r.seed,
        (None, None) => rand::random(),
    };
    r.population = q.population.or(r.population);
    r.log_scale |= q.log_scale;
    r.full_scan |= q.full_scan;
    r.sample_size = q.sample_size.or(r.sample_size);
    if let Some(path) = &q.output {
        let format = q.output_format.map(format).unwrap_or_else(|| FileFormat::from_path(path.as_ref()));
        r.output = Some(OutputSpec { path: path.clone(), format });
    }
    if let Some(p) = q.precision {
        r.precision = p;
    }
    Ok(r)
}
