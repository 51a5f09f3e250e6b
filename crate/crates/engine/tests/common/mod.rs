#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizketch_core::sketch::BucketSpec;
use vizketch_core::{SketchKind, SketchRequest};
use vizketch_engine::{EngineConfig, Event, Execution, PartialResult};

/// Writes `shards` CSV files `part-NN.csv` with columns id, x, cat.
/// Row ids run consecutively across shards.
pub fn write_shards(dir: &Path, shards: usize, rows: usize, seed: u64) -> Vec<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut id = 0;
    (0..shards)
        .map(|s| {
            let mut text = String::from("id,x,cat\n");
            for _ in 0..rows {
                let x: f64 = rng.gen::<f64>() * 100.0;
                let cat = ["ant", "bee", "cow", "dog", "eel"][rng.gen_range(0..5)];
                if rng.gen::<f64>() < 0.02 {
                    writeln!(text, "{id},,{cat}").unwrap();
                } else {
                    writeln!(text, "{id},{x},{cat}").unwrap();
                }
                id += 1;
            }
            let p = dir.join(format!("part-{s:02}.csv"));
            std::fs::write(&p, text).unwrap();
            p
        })
        .collect()
}

pub fn config(workers: usize, micropartition_rows: usize) -> EngineConfig {
    EngineConfig {
        micropartition_rows,
        batch_interval_ms: 20,
        threads: 2,
        local_workers: workers,
        fanout: 8,
        ..EngineConfig::default()
    }
}

pub fn exact_hist(col: &str) -> SketchRequest {
    let mut r = SketchRequest::new(SketchKind::HistogramExact, &[col]);
    r.x = Some(BucketSpec::Numeric { min: 0.0, max: 100.0, count: 20 });
    r
}

pub fn sampled_hist(col: &str, population: u64, seed: u64) -> SketchRequest {
    let mut r = SketchRequest::new(SketchKind::Histogram, &[col]);
    r.x = Some(BucketSpec::Numeric { min: 0.0, max: 100.0, count: 10 });
    r.sample_size = Some(500);
    r.population = Some(population);
    r.seed = seed;
    r
}

pub fn split(events: Vec<Event>) -> (Vec<PartialResult>, Event) {
    let mut partials = Vec::new();
    let mut terminal = None;
    for e in events {
        match e {
            Event::Partial(p) => partials.push(p),
            other => terminal = Some(other),
        }
    }
    (partials, terminal.expect("a terminal event"))
}

pub fn finish(e: Execution) -> PartialResult {
    e.wait().expect("execution completes")
}
