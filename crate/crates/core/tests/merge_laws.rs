mod common;

use std::collections::HashMap;

use common::*;
use proptest::prelude::*;
use vizketch_core::sketch::*;
use vizketch_core::{identity, merge_all, summarize, Datum, Table};

/// Requests whose merged result must not depend on how the table was split.
fn exact_requests() -> Vec<SketchRequest> {
    let mut out = Vec::new();
    let mut r = SketchRequest::new(SketchKind::HistogramExact, &["f"]);
    r.x = Some(BucketSpec::Numeric { min: -10.0, max: 70.0, count: 17 });
    out.push(r);
    out.push(SketchRequest::new(SketchKind::Moments, &["i"]));
    out.push(SketchRequest::new(SketchKind::Moments, &["f"]));
    let mut r = SketchRequest::new(SketchKind::NextItems, &["s", "f"]);
    r.sort_order = vec![SortKey { column: "g".into(), ascending: true }, SortKey { column: "i".into(), ascending: false }];
    r.top_k = 20;
    out.push(r.clone());
    r.kind = SketchKind::FindText;
    r.search = Some(Search { text: "a".into(), mode: SearchMode::Substring, case_sensitive: true });
    out.push(r);
    out.push(SketchRequest::new(SketchKind::DistinctCount, &["s"]));
    out.push(SketchRequest::new(SketchKind::StringQuantiles, &["s"]));
    let mut r = SketchRequest::new(SketchKind::Stacked, &["i", "g"]);
    r.x = Some(BucketSpec::Numeric { min: 0.0, max: 100.0, count: 9 });
    r.y = Some(BucketSpec::Strings { boundaries: vec!["blue".into(), "green".into(), "red".into()] });
    r.full_scan = true;
    out.push(r);
    let mut r = SketchRequest::new(SketchKind::Heatmap, &["i", "f"]);
    r.x = Some(BucketSpec::Numeric { min: 0.0, max: 100.0, count: 10 });
    r.y = Some(BucketSpec::Numeric { min: -10.0, max: 70.0, count: 6 });
    r.full_scan = true;
    out.push(r);
    out.push(SketchRequest::new(SketchKind::Pca, &["i", "f", "t"]));
    out
}

fn summarize_parts(parts: &[Table], req: &SketchRequest) -> Vec<Summary> {
    parts.iter().enumerate().map(|(k, p)| summarize(p, req, k as u64).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_scan_merge_equals_whole(seed in 0u64..10_000, rows in 0usize..3_000) {
        let t = random_table(seed, rows);
        let parts = split(&t, &random_cuts(seed ^ 1, rows, 8));
        for req in exact_requests() {
            let whole = codec::to_binary(&summarize(&t, &req, 0).unwrap());
            let summaries = summarize_parts(&parts, &req);
            let forward = merge_all(&req, &summaries).unwrap();
            let backward = merge_all(&req, summaries.iter().rev()).unwrap();
            prop_assert_eq!(&codec::to_binary(&forward), &whole, "{}", req.kind);
            prop_assert_eq!(&codec::to_binary(&backward), &whole, "{}", req.kind);
        }
    }

    #[test]
    fn identity_is_neutral(seed in 0u64..10_000, rows in 0usize..500) {
        let t = random_table(seed, rows);
        for req in exact_requests() {
            let s = summarize(&t, &req, 0).unwrap();
            let e = identity(&req).unwrap();
            prop_assert_eq!(&e.merge(&s).unwrap(), &s);
            prop_assert_eq!(&s.merge(&e).unwrap(), &s);
        }
    }

    #[test]
    fn codecs_round_trip(seed in 0u64..10_000, rows in 0usize..500) {
        let t = random_table(seed, rows);
        for req in exact_requests() {
            let s = summarize(&t, &req, 0).unwrap();
            let json = codec::to_json(&s);
            prop_assert_eq!(&codec::from_json::<Summary>(&json).unwrap(), &s);
            let bin = codec::to_binary(&s);
            prop_assert_eq!(&codec::from_binary::<Summary>(&bin).unwrap(), &s);
        }
    }

    /// Merged Misra-Gries counters never overestimate and undercount by at most N/(K+1).
    #[test]
    fn misra_gries_error_bound(seed in 0u64..10_000, rows in 0usize..3_000, k in 1u32..12) {
        let t = random_table(seed, rows);
        let mut req = SketchRequest::new(SketchKind::HeavyHittersMg, &["s"]);
        req.top_k = k;
        let parts = split(&t, &random_cuts(seed, rows, 8));
        let Summary::HeavyHitters(h) = merge_all(&req, &summarize_parts(&parts, &req)).unwrap() else {
            panic!()
        };
        let col = t.column("s").unwrap();
        let mut truth: HashMap<Datum, u64> = HashMap::new();
        let mut n = 0u64;
        for row in t.members().iter() {
            let d = col.datum(row);
            if d != Datum::Missing {
                *truth.entry(d).or_default() += 1;
                n += 1;
            }
        }
        prop_assert!(h.entries.len() <= k as usize);
        let slack = n / (k as u64 + 1);
        for (d, c) in &h.entries {
            prop_assert!(*c <= truth[d]);
        }
        for (d, c) in &truth {
            let found = h.entries.iter().find(|(e, _)| e == d).map_or(0, |(_, c)| *c);
            prop_assert!(found + slack >= *c, "{d:?}: {found} vs {c}");
        }
    }
}

#[test]
fn summary_size_does_not_grow_with_rows() {
    let small = random_table(1, 10);
    let large = random_table(2, 1_000_000);
    for req in exact_requests() {
        if req.kind == SketchKind::StringQuantiles {
            continue;
        }
        let a = codec::to_binary(&summarize(&small, &req, 0).unwrap()).len();
        let b = codec::to_binary(&summarize(&large, &req, 0).unwrap()).len();
        assert!(b <= a.max(64) * 4 + 4096, "{}: {a} -> {b}", req.kind);
    }
    let req = SketchRequest::new(SketchKind::StringQuantiles, &["s"]);
    let Summary::StringQuantiles(q) = summarize(&large, &req, 0).unwrap() else { panic!() };
    assert!(q.sample.len() <= q.k as usize);
}
