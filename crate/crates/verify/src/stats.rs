//! Accuracy suites: sketches run over micropartitions and merged exactly as
//! leaves and aggregators do, then compared with the oracles.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use vizketch_core::hash::combine;
use vizketch_core::sketch::heavy::reported;
use vizketch_core::sketch::request::{Search, SearchMode, SortKey};
use vizketch_core::sketch::{codec, distinct, sizing, BucketSpec};
use vizketch_core::{merge_all, summarize, Datum, SketchKind, SketchRequest, Summary, Table};
use vizketch_server::{render_payload, Payload};

use crate::data;
use crate::oracle;
use crate::outcome::Outcome;

pub const HISTOGRAM_ROWS: usize = 1_000_000;
pub const QUANTILE_ROWS: usize = 100_000;
pub const HEIGHT: u32 = 100;
pub const WIDTH: u32 = 200;
pub const BARS: u32 = 50;
pub const DELTA: f64 = 0.05;
const PARTITION_ROWS: usize = 100_000;

/// Contiguous windows of at most `rows` rows, keyed by position.
pub fn partitions(table: &Table, rows: usize) -> Vec<(u64, Table)> {
    let n = table.physical_rows();
    (0..n.div_ceil(rows).max(1))
        .map(|i| (combine(0x9a27, i as u64), table.restrict(i * rows..((i + 1) * rows).min(n))))
        .collect()
}

pub fn run(parts: &[(u64, Table)], req: &SketchRequest) -> Summary {
    let summaries: Vec<Summary> = parts.iter().map(|(k, t)| summarize(t, req, *k).unwrap()).collect();
    merge_all(req, &summaries).unwrap()
}

fn elapsed_outcome(criterion: &'static str, start: Instant, passed: bool, detail: String) -> Outcome {
    Outcome { criterion, passed, detail, elapsed: start.elapsed() }
}

/// Sample size with the constant `c` in place of the frozen one.
pub fn histogram_n(c: f64) -> u64 {
    (c * (HEIGHT as f64 * BARS as f64).powi(2) * (1.0 / DELTA).ln()).ceil() as u64
}

pub fn cdf_n(c: f64) -> u64 {
    (c * (HEIGHT as f64).powi(2) * (1.0 / DELTA).ln()).ceil() as u64
}

pub fn quantile_n(c: f64) -> u64 {
    (c * (2.0 * HEIGHT as f64).powi(2) * (1.0 / DELTA).ln()).ceil() as u64
}

pub struct Column {
    pub values: Vec<f64>,
    pub parts: Vec<(u64, Table)>,
    pub min: f64,
    pub max: f64,
}

pub fn mixture_column(seed: u64, rows: usize) -> Column {
    let values = data::mixture(seed, rows);
    let parts = partitions(&data::float_table("v", &values), PARTITION_ROWS);
    let (min, max) = oracle::min_max(&values);
    Column { values, parts, min, max }
}

/// Trials, out of `trials`, whose every bar is within one pixel of the
/// bar drawn from exact counts. `sample_size` overrides the default.
pub fn histogram_successes(col: &Column, trials: usize, seed: u64, sample_size: Option<u64>) -> usize {
    let ideal = oracle::ideal_bars(&oracle::histogram(&col.values, col.min, col.max, BARS as usize), HEIGHT);
    (0..trials)
        .filter(|&t| {
            let mut req = SketchRequest::new(SketchKind::Histogram, &["v"]);
            req.x = Some(BucketSpec::Numeric { min: col.min, max: col.max, count: BARS });
            req.pixels.height = HEIGHT;
            req.pixels.width = WIDTH;
            req.delta = DELTA;
            req.population = Some(col.values.len() as u64);
            req.sample_size = sample_size;
            req.seed = combine(seed, t as u64);
            let Payload::Histogram { bars, .. } = render_payload(&run(&col.parts, &req), &req).unwrap() else {
                unreachable!()
            };
            bars.iter().zip(&ideal).all(|(&b, &i)| (b as i64 - i).abs() <= 1)
        })
        .count()
}

/// Trials whose every rendered CDF pixel is within `0.6 / V` of the true
/// fraction.
pub fn cdf_successes(col: &Column, trials: usize, seed: u64, sample_size: Option<u64>) -> usize {
    let truth = oracle::cdf(&col.values, col.min, col.max, WIDTH as usize);
    let bound = 0.6 / HEIGHT as f64;
    (0..trials)
        .filter(|&t| {
            let mut req = SketchRequest::new(SketchKind::Cdf, &["v"]);
            req.x = Some(BucketSpec::Numeric { min: col.min, max: col.max, count: WIDTH });
            req.pixels.height = HEIGHT;
            req.pixels.width = WIDTH;
            req.delta = DELTA;
            req.population = Some(col.values.len() as u64);
            req.sample_size = sample_size;
            req.seed = combine(seed, t as u64);
            let Payload::Cdf { pixels, .. } = render_payload(&run(&col.parts, &req), &req).unwrap() else {
                unreachable!()
            };
            pixels
                .iter()
                .zip(&truth)
                .all(|(&p, &f)| (p as f64 / HEIGHT as f64 - f).abs() <= bound + 1e-12)
        })
        .count()
}

pub const SCROLL_POSITIONS: [u32; 5] = [1, 25, 50, 75, 99];

/// Per scroll position, trials whose returned row has rank within
/// `1 / 2V` of the position.
pub fn quantile_successes(parts: &[(u64, Table)], trials: usize, seed: u64, sample_size: Option<u64>) -> Vec<usize> {
    let n = QUANTILE_ROWS as f64;
    SCROLL_POSITIONS
        .iter()
        .map(|&j| {
            (0..trials)
                .filter(|&t| {
                    let mut req = SketchRequest::new(SketchKind::Quantile, &["rank"]);
                    req.sort_order = vec![SortKey { column: "rank".into(), ascending: true }];
                    req.pixels.height = HEIGHT;
                    req.delta = DELTA;
                    req.scroll_position = j;
                    req.population = Some(QUANTILE_ROWS as u64);
                    req.sample_size = sample_size;
                    req.seed = combine(combine(seed, j as u64), t as u64);
                    let Payload::ScrollTarget { row: Some(row), .. } = render_payload(&run(parts, &req), &req).unwrap()
                    else {
                        return false;
                    };
                    let rank = row[0].as_f64().unwrap();
                    (rank / n - j as f64 / HEIGHT as f64).abs() <= 1.0 / (2.0 * HEIGHT as f64)
                })
                .count()
        })
        .collect()
}

pub fn rank_partitions(seed: u64) -> Vec<(u64, Table)> {
    partitions(&data::int_table("rank", &data::shuffled_ranks(seed, QUANTILE_ROWS)), 10_000)
}

/// The pass rule shared by the sampled-accuracy criteria.
fn rate_ok(successes: usize, trials: usize) -> bool {
    successes as f64 >= 0.9 * trials as f64
}

pub fn histogram_accuracy(trials: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let col = mixture_column(combine(seed, 1), HISTOGRAM_ROWS);
    let ok = histogram_successes(&col, trials, seed, None);
    let not_rejected = oracle::binomial_not_rejected(ok as u64, trials as u64, 0.95, 0.01);
    let p = oracle::binomial_lower_tail(ok as u64, trials as u64, 0.95);
    let n = sizing::histogram_n(HEIGHT, BARS, DELTA).min(HISTOGRAM_ROWS as u64);
    elapsed_outcome(
        "histogram accuracy",
        start,
        rate_ok(ok, trials) && not_rejected,
        format!("{ok}/{trials} trials within 1px (n={n}, binomial p={p:.3} vs 95%)"),
    )
}

pub fn cdf_accuracy(trials: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let col = mixture_column(combine(seed, 2), HISTOGRAM_ROWS);
    let ok = cdf_successes(&col, trials, seed, None);
    let n = sizing::cdf_n(HEIGHT, DELTA).min(HISTOGRAM_ROWS as u64);
    elapsed_outcome(
        "cdf accuracy",
        start,
        rate_ok(ok, trials),
        format!("{ok}/{trials} trials with every pixel within 0.6/V (n={n})"),
    )
}

pub fn quantile_accuracy(trials: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let parts = rank_partitions(combine(seed, 3));
    let ok = quantile_successes(&parts, trials, seed, None);
    let detail = SCROLL_POSITIONS
        .iter()
        .zip(&ok)
        .map(|(j, k)| format!("j={j}:{k}/{trials}"))
        .collect::<Vec<_>>()
        .join(" ");
    elapsed_outcome("quantile", start, ok.iter().all(|&k| rate_ok(k, trials)), detail)
}

pub const HEAVY: [(&str, f64); 4] = [("alpha", 0.2), ("beta", 0.15), ("gamma", 0.05), ("delta", 0.04)];

pub fn heavy_hitters_sampled(trials: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let k = 10u32;
    let rows = 100_000;
    // 0.56 of the mass over 40 values: 0.014 each, below 1/(4K).
    let values = data::planted(combine(seed, 4), rows, &HEAVY, 40);
    let freq = oracle::frequencies(&values);
    let light: Vec<&String> = freq.iter().filter(|(_, &c)| c as f64 <= rows as f64 / (4.0 * k as f64)).map(|(v, _)| v).collect();
    let parts = partitions(&data::str_table("v", &values), 10_000);
    let ok = (0..trials)
        .filter(|&t| {
            let mut req = SketchRequest::new(SketchKind::HeavyHittersSampled, &["v"]);
            req.top_k = k;
            req.delta = DELTA;
            req.population = Some(rows as u64);
            req.seed = combine(seed, t as u64);
            let Payload::HeavyHitters { rows: found, .. } = render_payload(&run(&parts, &req), &req).unwrap() else {
                unreachable!()
            };
            let names: Vec<&str> = found.iter().filter_map(|r| r.value.as_str()).collect();
            names.contains(&"alpha") && names.contains(&"beta") && !light.iter().any(|l| names.contains(&l.as_str()))
        })
        .count();
    elapsed_outcome(
        "heavy hitters sampled",
        start,
        rate_ok(ok, trials),
        format!("{ok}/{trials} trials (n={})", sizing::heavy_hitters_n(k, DELTA)),
    )
}

/// Merges summaries pairwise in a random tree.
fn random_tree_merge(mut summaries: Vec<Summary>, rng: &mut impl Rng) -> Summary {
    while summaries.len() > 1 {
        summaries.shuffle(rng);
        let a = summaries.pop().unwrap();
        let b = summaries.pop().unwrap();
        summaries.push(a.merge(&b).unwrap());
    }
    summaries.pop().unwrap()
}

/// Checks the deterministic frequent-items guarantee on one summary.
fn counter_bounds_hold(summary: &Summary, truth: &std::collections::HashMap<i64, u64>, n: u64, k: u32) -> bool {
    let Summary::HeavyHitters(h) = summary else { return false };
    let bound = n as f64 / k as f64;
    let got: BTreeMap<i64, u64> = reported(h)
        .into_iter()
        .map(|(d, c)| match d {
            Datum::Int(v) => (v, c),
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    let frequent_reported = truth.iter().filter(|(_, &f)| f as f64 > bound).all(|(v, _)| got.contains_key(v));
    let counts_close = got.iter().all(|(v, &c)| {
        let f = truth.get(v).copied().unwrap_or(0);
        c <= f && (f - c) as f64 <= bound
    });
    frequent_reported && counts_close
}

pub fn misra_gries(streams: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let mut r = data::rng(combine(seed, 5));
    let mut failures = Vec::new();
    for s in 0..streams {
        let k = r.gen_range(2..=20);
        let stream = data::counter_stream(combine(seed, s as u64), k as usize);
        let truth = oracle::frequencies(&stream);
        let table = data::int_table("v", &stream);
        let mut req = SketchRequest::new(SketchKind::HeavyHittersMg, &["v"]);
        req.top_k = k;
        let whole = summarize(&table, &req, 0).unwrap();
        let parts = data::random_split(combine(seed, s as u64), &table, 8);
        let summaries = parts.iter().enumerate().map(|(i, p)| summarize(p, &req, i as u64).unwrap()).collect();
        let merged = random_tree_merge(summaries, &mut r);
        let n = stream.len() as u64;
        if !counter_bounds_hold(&whole, &truth, n, k) || !counter_bounds_hold(&merged, &truth, n, k) {
            failures.push(s);
        }
    }
    elapsed_outcome(
        "misra-gries bounds",
        start,
        failures.is_empty(),
        format!("{}/{streams} streams within N/K, whole and merged", streams - failures.len()),
    )
}

pub fn distinct_count(seed: u64) -> Outcome {
    let start = Instant::now();
    let truth = 100_000usize;
    let mut r = data::rng(combine(seed, 6));
    let values: Vec<i64> = (0..3 * truth).map(|i| if i < truth { i as i64 } else { r.gen_range(0..truth as i64) }).collect();
    assert_eq!(oracle::distinct(&values), truth);
    let mut req = SketchRequest::new(SketchKind::DistinctCount, &["v"]);
    req.precision = 14;
    let parts = partitions(&data::int_table("v", &values), 37_000);
    let Summary::Distinct(d) = run(&parts, &req) else { unreachable!() };
    let estimate = distinct::estimate(&d);
    let err = (estimate - truth as f64).abs() / truth as f64;
    elapsed_outcome(
        "distinct count",
        start,
        err <= 0.05,
        format!("estimate {estimate:.0} for {truth} distinct, relative error {:.4}", err),
    )
}

/// The full-scan requests whose merged result must equal the whole-table
/// result byte for byte.
pub fn full_scan_requests() -> Vec<SketchRequest> {
    let mut out = Vec::new();
    let mut r = SketchRequest::new(SketchKind::HistogramExact, &["f"]);
    r.x = Some(BucketSpec::Numeric { min: -20.0, max: 180.0, count: 37 });
    out.push(r);
    out.push(SketchRequest { moments: 4, ..SketchRequest::new(SketchKind::Moments, &["f"]) });
    let order = vec![
        SortKey { column: "s".into(), ascending: true },
        SortKey { column: "i".into(), ascending: false },
    ];
    out.push(SketchRequest { sort_order: order.clone(), top_k: 25, ..SketchRequest::new(SketchKind::NextItems, &["s", "i", "t"]) });
    out.push(SketchRequest {
        sort_order: order,
        top_k: 25,
        search: Some(Search { text: "b".into(), mode: SearchMode::Substring, case_sensitive: true }),
        ..SketchRequest::new(SketchKind::FindText, &["s", "i"])
    });
    out.push(SketchRequest { top_k: 10, ..SketchRequest::new(SketchKind::HeavyHittersMg, &["s"]) });
    out.push(SketchRequest { precision: 12, ..SketchRequest::new(SketchKind::DistinctCount, &["s"]) });
    out.push(SketchRequest::new(SketchKind::StringQuantiles, &["s"]));
    let mut r = SketchRequest::new(SketchKind::Stacked, &["f", "g"]);
    r.x = Some(BucketSpec::Numeric { min: -20.0, max: 180.0, count: 12 });
    r.y = Some(BucketSpec::Strings { boundaries: vec!["north".into(), "south".into(), "west".into()] });
    r.full_scan = true;
    out.push(r);
    let mut r = SketchRequest::new(SketchKind::Heatmap, &["i", "t"]);
    r.x = Some(BucketSpec::Numeric { min: -50.0, max: 1_000.0, count: 20 });
    r.y = Some(BucketSpec::Numeric { min: 1.7e12, max: 1.7e12 + 8.64e7, count: 15 });
    r.full_scan = true;
    out.push(r);
    out.push(SketchRequest { full_scan: true, ..SketchRequest::new(SketchKind::Pca, &["i", "f"]) });
    out
}

/// Per request, how many of `tables` random tables merged byte-identically.
pub fn merge_law_counts(tables: usize, seed: u64) -> Vec<(SketchKind, usize)> {
    let requests = full_scan_requests();
    let mut identical = vec![0; requests.len()];
    for t in 0..tables {
        let mut r = data::rng(combine(seed, t as u64));
        let table = data::random_table(combine(seed, t as u64), r.gen_range(0..=10_000));
        let parts = data::random_split(combine(seed, t as u64), &table, 8);
        for (i, req) in requests.iter().enumerate() {
            let whole = summarize(&table, req, 0).unwrap();
            let summaries: Vec<Summary> =
                parts.iter().enumerate().map(|(j, p)| summarize(p, req, j as u64).unwrap()).collect();
            let merged = merge_all(req, &summaries).unwrap();
            if codec::to_binary(&whole) == codec::to_binary(&merged) {
                identical[i] += 1;
            }
        }
    }
    requests.iter().map(|r| r.kind).zip(identical).collect()
}

pub fn merge_laws(tables: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let counts = merge_law_counts(tables, seed);
    let fast = start.elapsed().as_secs() < 60;
    let broken: Vec<String> = counts
        .iter()
        .filter(|(_, k)| *k < tables)
        .map(|(kind, k)| format!("{kind} {k}/{tables}"))
        .collect();
    let detail = if broken.is_empty() {
        format!("{} sketches identical on {tables}/{tables} tables", counts.len())
    } else {
        format!("not identical: {}", broken.join(", "))
    };
    elapsed_outcome("merge laws", start, broken.is_empty() && fast, detail)
}
