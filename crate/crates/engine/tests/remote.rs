mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use vizketch_core::sketch::codec;
use vizketch_core::{SketchKind, SketchRequest};
use vizketch_engine::remote::WorkerServer;
use vizketch_engine::{EngineConfig, LineageOp, LocalWorker, Root, Source};

fn start(cfg: &EngineConfig, n: usize, index: usize, bind: &str) -> WorkerServer {
    WorkerServer::start(Arc::new(LocalWorker::new(index, n, cfg)), bind).unwrap()
}

fn requests() -> Vec<SketchRequest> {
    let mut hh = SketchRequest::new(SketchKind::HeavyHittersMg, &["cat"]);
    hh.top_k = 3;
    vec![exact_hist("x"), sampled_hist("x", 900, 9), SketchRequest::new(SketchKind::Moments, &["x", "id"]), hh]
}

fn answers(root: &Root, id: &str) -> Vec<Vec<u8>> {
    requests().into_iter().map(|r| codec::to_binary(&finish(root.execute(id, r).unwrap()).summary)).collect()
}

#[test]
fn tcp_workers_match_in_process_ones() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 3, 300, 1);
    let glob = format!("{}/*.csv", dir.path().display());
    let mut cfg = config(3, 100);
    let servers: Vec<WorkerServer> = (0..3).map(|i| start(&cfg, 3, i, "127.0.0.1:0")).collect();
    cfg.workers = servers.iter().map(|s| s.addr().to_string()).collect();
    let remote = Root::connect(cfg.clone()).unwrap();
    let local = Root::in_process(cfg).unwrap();

    let rd = remote.register(Source::new(glob.clone())).unwrap();
    let ld = local.root.register(Source::new(glob)).unwrap();
    assert_eq!(answers(&remote, &rd.id), answers(&local.root, &ld.id));

    let rf = remote.derive(LineageOp::Filter { parent: rd.id, predicate: "x < 50".into() }, 0).unwrap();
    let lf = local.root.derive(LineageOp::Filter { parent: ld.id, predicate: "x < 50".into() }, 0).unwrap();
    assert_eq!(remote.schema(&rf.id).unwrap(), local.root.schema(&lf.id).unwrap());
    assert_eq!(answers(&remote, &rf.id), answers(&local.root, &lf.id));

    let mut req = SketchRequest::new(SketchKind::Histogram, &["x"]);
    req.seed = 4;
    let a = finish(remote.query(&rf.id, req.clone()).unwrap());
    let b = finish(local.root.query(&lf.id, req).unwrap());
    assert_eq!(a.summary, b.summary);
}

#[test]
fn restarted_worker_rebuilds_and_answers_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 2, 200, 2);
    let mut cfg = config(2, 50);
    let first = start(&cfg, 2, 0, "127.0.0.1:0");
    let second = start(&cfg, 2, 1, "127.0.0.1:0");
    let addr = first.addr().to_string();
    cfg.workers = vec![addr.clone(), second.addr().to_string()];
    let root = Root::connect(cfg.clone()).unwrap();
    let d = root.register(Source::new(format!("{}/*.csv", dir.path().display()))).unwrap();
    let f = root.derive(LineageOp::Filter { parent: d.id.clone(), predicate: "cat != 'ant'".into() }, 0).unwrap();
    let before = answers(&root, &f.id);

    first.shutdown();
    let reborn = start(&cfg, 2, 0, &addr);
    root.set_cache_enabled(false);
    assert_eq!(answers(&root, &f.id), before);
    let replays = reborn.worker().stats.replays.load(std::sync::atomic::Ordering::SeqCst);
    assert_eq!(replays, 2);
    drop(second);
}

#[test]
fn unreachable_workers_fail_the_execution() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 1, 20, 3);
    let mut cfg = config(1, 50);
    cfg.retry_backoff_ms = 10;
    let server = start(&cfg, 1, 0, "127.0.0.1:0");
    cfg.workers = vec![server.addr().to_string()];
    let root = Root::connect(cfg).unwrap();
    let d = root.register(Source::new(format!("{}/*.csv", dir.path().display()))).unwrap();
    server.shutdown();
    let t = Instant::now();
    let err = root.execute(&d.id, exact_hist("x")).unwrap().wait().unwrap_err();
    assert_eq!(err.code(), "WORKER_LOST");
    assert!(t.elapsed() < Duration::from_secs(5));
}

#[test]
fn remote_cancel_stops_the_worker() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 1, 500, 4);
    let mut cfg = config(1, 5);
    let server = start(&cfg, 1, 0, "127.0.0.1:0");
    server.worker().set_delay(Some(Arc::new(|_: &vizketch_engine::partition::Micropartition| {
        Some(Duration::from_millis(10))
    })));
    cfg.workers = vec![server.addr().to_string()];
    let root = Root::connect(cfg).unwrap();
    let d = root.register(Source::new(format!("{}/*.csv", dir.path().display()))).unwrap();
    let e = root.execute(&d.id, exact_hist("x")).unwrap();
    std::thread::sleep(Duration::from_millis(150));
    assert!(root.cancel(e.id.id));
    let (_, terminal) = split(e.collect());
    assert!(matches!(terminal, vizketch_engine::Event::Cancelled(_)), "{terminal:?}");
    std::thread::sleep(Duration::from_millis(100));
    assert!(server.worker().stats.executed.load(std::sync::atomic::Ordering::SeqCst) < 100);
}
