//! Engine-level suites: progressive partials, fault tolerance,
//! cancellation and latency.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use vizketch_core::hash::combine;
use vizketch_core::sketch::{codec, BucketSpec};
use vizketch_core::{SketchKind, SketchRequest};
use vizketch_engine::redo::Failpoint;
use vizketch_engine::remote::WorkerServer;
use vizketch_engine::{EngineConfig, Event, LineageOp, LocalCluster, LocalWorker, Root, Source};

use crate::data;
use crate::outcome::Outcome;

fn outcome(criterion: &'static str, start: Instant, passed: bool, detail: String) -> Outcome {
    Outcome { criterion, passed, detail, elapsed: start.elapsed() }
}

fn config(workers: usize, threads: usize, micropartition_rows: usize) -> EngineConfig {
    EngineConfig {
        micropartition_rows,
        batch_interval_ms: 50,
        threads,
        local_workers: workers,
        fanout: 4,
        ..EngineConfig::default()
    }
}

/// Writes `shards` files of `rows` values in [0, 100) with two decimals,
/// plus a category column.
fn write_shards(dir: &Path, shards: usize, rows: usize, seed: u64) -> String {
    let mut r = data::rng(seed);
    for s in 0..shards {
        let mut text = String::with_capacity(rows * 10);
        text.push_str("x,c\n");
        for _ in 0..rows {
            let x = r.gen_range(0..10_000) as f64 / 100.0;
            writeln!(text, "{x:.2},{}", ["p", "q", "r", "s"][r.gen_range(0..4)]).unwrap();
        }
        std::fs::write(dir.join(format!("shard-{s:03}.csv")), text).unwrap();
    }
    format!("{}/*.csv", dir.display())
}

fn histogram(kind: SketchKind, seed: u64) -> SketchRequest {
    let mut r = SketchRequest::new(kind, &["x"]);
    r.x = Some(BucketSpec::Numeric { min: 0.0, max: 100.0, count: 25 });
    r.seed = seed;
    r
}

fn bytes(root: &Root, dataset: &str, req: &SketchRequest) -> vizketch_engine::Result<Vec<u8>> {
    Ok(codec::to_binary(&root.execute(dataset, req.clone())?.wait()?.summary))
}

pub fn progressive(seed: u64) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let glob = write_shards(dir.path(), 8, 5_000, combine(seed, 10));
    let mut sampled = histogram(SketchKind::Histogram, combine(seed, 11));
    sampled.sample_size = Some(4_000);
    let requests = [histogram(SketchKind::HistogramExact, 0), sampled];

    let run = |delay: bool| {
        let c = Root::in_process(config(8, 2, 5_000)).unwrap();
        let d = c.root.register(Source::new(glob.clone())).unwrap();
        c.root.schema(&d.id).unwrap();
        if delay {
            c.workers[0].set_delay(Some(Arc::new(|_: &_| Some(Duration::from_secs(1)))));
        }
        let leaves = c.root.plan(&d.id).unwrap().leaves.len();
        let events: Vec<Vec<Event>> =
            requests.iter().map(|r| c.root.execute(&d.id, r.clone()).unwrap().collect()).collect();
        (leaves, events)
    };
    let (leaves, slow) = run(true);
    let (_, fast) = run(false);

    let mut problems = Vec::new();
    let mut partial_counts = Vec::new();
    for (i, (slow, fast)) in slow.iter().zip(&fast).enumerate() {
        let (Some(Event::Complete(done)), Some(Event::Complete(reference))) = (slow.last(), fast.last()) else {
            problems.push(format!("request {i} did not complete"));
            continue;
        };
        let partials: Vec<_> = slow[..slow.len() - 1]
            .iter()
            .filter_map(|e| if let Event::Partial(p) = e { Some(p) } else { None })
            .collect();
        partial_counts.push(partials.len());
        if partials.is_empty() {
            problems.push(format!("request {i} streamed no partial"));
        }
        let total = done.summary.additive_counts().unwrap();
        if !partials.iter().all(|p| p.summary.additive_counts().unwrap().iter().zip(&total).all(|(a, b)| a <= b)) {
            problems.push(format!("request {i} partial exceeds final"));
        }
        if codec::to_binary(&done.summary) != codec::to_binary(&reference.summary) {
            problems.push(format!("request {i} differs from undelayed run"));
        }
    }
    let detail = if problems.is_empty() {
        format!("{leaves} leaves, partials before terminal {partial_counts:?}, final bytes match undelayed run")
    } else {
        problems.join("; ")
    };
    outcome("progressive", start, problems.is_empty() && leaves >= 8, detail)
}

fn fault_requests(column: &str, seed: u64) -> Vec<SketchRequest> {
    let mut exact = histogram(SketchKind::HistogramExact, 0);
    let mut sampled = histogram(SketchKind::Histogram, combine(seed, 20));
    exact.columns = vec![column.into()];
    sampled.columns = vec![column.into()];
    sampled.sample_size = Some(2_000);
    let mut hh = SketchRequest::new(SketchKind::HeavyHittersMg, &["c"]);
    hh.top_k = 3;
    vec![exact, sampled, SketchRequest::new(SketchKind::Moments, &[column]), hh]
}

/// A source, a filter on it and a computed column on the filter.
fn chain(root: &Root, glob: &str, seed: u64) -> vizketch_engine::Result<Vec<String>> {
    let d = root.register(Source::new(glob))?;
    let f = root.derive(LineageOp::Filter { parent: d.id.clone(), predicate: "x >= 20".into() }, 0)?;
    let m = root.derive(LineageOp::MapColumn { parent: f.id.clone(), expr: "x * 2 - 40".into(), name: "y".into() }, seed)?;
    Ok(vec![d.id, f.id, m.id])
}

fn chain_answers(root: &Root, ids: &[String], seed: u64) -> vizketch_engine::Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for (id, column) in ids.iter().zip(["x", "x", "y"]) {
        for r in fault_requests(column, seed) {
            out.push(bytes(root, id, &r)?);
        }
    }
    Ok(out)
}

fn worker_restart(glob: &str, seed: u64) -> Result<String, String> {
    let mut cfg = config(2, 1, 2_000);
    let spawn = |i: usize, bind: &str, cfg: &EngineConfig| {
        WorkerServer::start(Arc::new(LocalWorker::new(i, 2, cfg)), bind).map_err(|e| e.to_string())
    };
    let first = spawn(0, "127.0.0.1:0", &cfg)?;
    let second = spawn(1, "127.0.0.1:0", &cfg)?;
    let addr = first.addr().to_string();
    cfg.workers = vec![addr.clone(), second.addr().to_string()];
    let root = Root::connect(cfg.clone()).map_err(|e| e.to_string())?;
    let ids = chain(&root, glob, seed).map_err(|e| e.to_string())?;
    let before = chain_answers(&root, &ids, seed).map_err(|e| e.to_string())?;

    first.shutdown();
    let reborn = spawn(0, &addr, &cfg)?;
    root.set_cache_enabled(false);
    let after = chain_answers(&root, &ids, seed).map_err(|e| e.to_string())?;
    let replays = reborn.worker().stats.replays.load(Ordering::SeqCst);
    drop(second);
    if after != before {
        return Err("answers changed after worker restart".into());
    }
    if replays == 0 {
        return Err("restarted worker never replayed lineage".into());
    }
    Ok(format!("worker restart ok ({replays} replays)"))
}

fn soft_state_loss(glob: &str, seed: u64) -> Result<String, String> {
    let c = Root::in_process(config(2, 1, 2_000)).map_err(|e| e.to_string())?;
    let ids = chain(&c.root, glob, seed).map_err(|e| e.to_string())?;
    let before = chain_answers(&c.root, &ids, seed).map_err(|e| e.to_string())?;
    c.root.drop_soft_state().map_err(|e| e.to_string())?;
    if c.workers.iter().any(|w| w.resident(&ids[2])) {
        return Err("soft state survived".into());
    }
    let after = chain_answers(&c.root, &ids, seed).map_err(|e| e.to_string())?;
    if after != before {
        return Err("answers changed after dropping soft state".into());
    }
    Ok("soft state loss ok".into())
}

fn logged(state: &Path) -> EngineConfig {
    let mut cfg = config(2, 1, 2_000);
    cfg.redo_log = Some(state.join("redo.log"));
    cfg
}

fn root_restart(glob: &str, seed: u64) -> Result<String, String> {
    let state = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ids, before) = {
        let c: LocalCluster = Root::in_process(logged(state.path())).map_err(|e| e.to_string())?;
        let ids = chain(&c.root, glob, seed).map_err(|e| e.to_string())?;
        let before = chain_answers(&c.root, &ids, seed).map_err(|e| e.to_string())?;
        (ids, before)
    };
    let c = Root::in_process(logged(state.path())).map_err(|e| e.to_string())?;
    let after = chain_answers(&c.root, &ids, seed).map_err(|e| e.to_string())?;
    if after != before {
        return Err("answers changed after root restart".into());
    }
    Ok("root restart ok".into())
}

/// An append that fails leaves nothing behind; one that lands but is never
/// acknowledged is still recovered.
fn log_before_ack(glob: &str) -> Result<String, String> {
    let state = tempfile::tempdir().map_err(|e| e.to_string())?;
    let kept = {
        let c = Root::in_process(logged(state.path())).map_err(|e| e.to_string())?;
        let kept = c.root.register(Source::new(glob)).map_err(|e| e.to_string())?;
        let filter = || LineageOp::Filter { parent: kept.id.clone(), predicate: "x < 50".into() };
        c.root.set_failpoint(Failpoint::BeforeAppend);
        if c.root.derive(filter(), 0).is_ok() || c.root.datasets().len() != 1 {
            return Err("failed append was acknowledged".into());
        }
        c.root.set_failpoint(Failpoint::AfterAppend);
        if c.root.derive(filter(), 0).is_ok() {
            return Err("crash after append was acknowledged".into());
        }
        kept
    };
    let c = Root::in_process(logged(state.path())).map_err(|e| e.to_string())?;
    let ids: Vec<String> = c.root.datasets().into_iter().map(|d| d.id).collect();
    if ids.len() != 2 || !ids.contains(&kept.id) {
        return Err(format!("recovered {} datasets, expected 2", ids.len()));
    }
    Ok("log-before-ack ok".into())
}

pub fn fault_tolerance(seed: u64) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let glob = write_shards(dir.path(), 4, 3_000, combine(seed, 21));
    let checks = [
        worker_restart(&glob, seed),
        soft_state_loss(&glob, seed),
        root_restart(&glob, seed),
        log_before_ack(&glob),
    ];
    let passed = checks.iter().all(Result::is_ok);
    let detail = checks.iter().map(|c| c.clone().unwrap_or_else(|e| format!("FAILED {e}"))).collect::<Vec<_>>().join(", ");
    outcome("fault tolerance", start, passed, detail)
}

pub fn cancellation(seed: u64) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let glob = write_shards(dir.path(), 1, 1_000, combine(seed, 30));
    let c = Root::in_process(config(1, 2, 10)).unwrap();
    let d = c.root.register(Source::new(glob)).unwrap();
    let parts = c.root.plan(&d.id).unwrap().leaves[0].micropartitions.len();
    c.workers[0].set_delay(Some(Arc::new(|_: &_| Some(Duration::from_millis(50)))));
    let e = c.root.execute(&d.id, histogram(SketchKind::HistogramExact, 0)).unwrap();
    std::thread::sleep(Duration::from_millis(300));
    let accepted = c.root.cancel(e.id.id);
    let terminal = e.collect().pop();
    // Anything already running finishes; nothing queued may start.
    std::thread::sleep(Duration::from_millis(200));
    let executed = c.workers[0].stats.executed.load(Ordering::SeqCst);
    let cancelled = matches!(terminal, Some(Event::Cancelled(_)));
    outcome(
        "cancellation",
        start,
        accepted && cancelled && parts == 100 && executed < 100,
        format!("{executed}/{parts} micropartitions executed, terminal cancelled: {cancelled}"),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

pub const SCALING_ROWS: usize = 400_000;
const SCALING_RUNS: usize = 5;

/// Median query latency with `threads` threads, each owning one shard of
/// `rows` rows.
pub fn scaled_latency(threads: usize, rows: usize, kind: SketchKind, seed: u64) -> Duration {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_shards(dir.path(), threads, rows, combine(seed, threads as u64));
    let c = Root::in_process(config(1, threads, rows)).unwrap();
    let d = c.root.register(Source::new(glob)).unwrap();
    c.root.schema(&d.id).unwrap();
    let population = (threads * rows) as u64;
    let times = (0..SCALING_RUNS + 1)
        .map(|run| {
            // A fresh seed per run keeps the caches out of the measurement.
            let mut req = histogram(kind, combine(seed, 1_000 + run as u64));
            req.population = Some(population);
            let t = Instant::now();
            c.root.execute(&d.id, req).unwrap().wait().unwrap();
            t.elapsed()
        })
        .skip(1)
        .collect();
    median(times)
}

pub fn thread_scaling(seed: u64) -> Outcome {
    let start = Instant::now();
    let exact = [1, 8].map(|t| scaled_latency(t, SCALING_ROWS, SketchKind::HistogramExact, seed));
    let sampled = [1, 8].map(|t| scaled_latency(t, SCALING_ROWS, SketchKind::Histogram, seed));
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let exact_ok = exact[1].as_secs_f64() <= 1.5 * exact[0].as_secs_f64();
    let sampled_ok = sampled[1] <= sampled[0];
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        "thread scaling",
        start,
        exact_ok && sampled_ok,
        format!(
            "exact {:.0}ms -> {:.0}ms (limit {:.0}ms), sampled {:.0}ms -> {:.0}ms, {cores} core(s)",
            ms(exact[0]),
            ms(exact[1]),
            1.5 * ms(exact[0]),
            ms(sampled[0]),
            ms(sampled[1])
        ),
    )
}

pub const DESK_ROWS: usize = 10_000_000;

/// A histogram as the UI issues it: no range given, so the root first
/// computes one, then draws the sampled bars.
pub fn desk_latency(seed: u64) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let glob = write_shards(dir.path(), 10, DESK_ROWS / 10, combine(seed, 40));
    let c = Root::in_process(config(1, 0, 250_000)).unwrap();
    let d = c.root.register(Source::new(glob)).unwrap();
    c.root.schema(&d.id).unwrap();
    let mut req = SketchRequest::new(SketchKind::Histogram, &["x"]);
    req.seed = combine(seed, 41);
    let t = Instant::now();
    let result = c.root.query(&d.id, req).and_then(|e| e.wait());
    let took = t.elapsed();
    let rows = match &result {
        Ok(r) => r.summary.additive_counts().map_or(0, |c| c.iter().sum::<u64>()),
        Err(_) => 0,
    };
    outcome(
        "desk latency",
        start,
        result.is_ok() && took < Duration::from_secs(2),
        format!("{DESK_ROWS} rows, {:.0}ms end to end ({rows} sampled), limit 2000ms", took.as_secs_f64() * 1e3),
    )
}
