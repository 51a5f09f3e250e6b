mod common;

use std::sync::atomic::Ordering;

use common::*;
use vizketch_core::sketch::codec;
use vizketch_core::{SketchKind, SketchRequest, Summary};
use vizketch_engine::redo::Failpoint;
use vizketch_engine::{LineageOp, Root, Source};

fn glob(dir: &tempfile::TempDir) -> String {
    format!("{}/*.csv", dir.path().display())
}

fn moments(col: &str) -> SketchRequest {
    SketchRequest::new(SketchKind::Moments, &[col])
}

fn rows(root: &Root, id: &str) -> u64 {
    let Summary::Moments(m) = finish(root.execute(id, moments("id")).unwrap()).summary else { panic!() };
    m.rows()
}

#[test]
fn shards_spread_over_workers() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 4, 25, 1);
    let c = Root::in_process(config(2, 1_000)).unwrap();
    let d = c.root.register(Source::new(glob(&dir))).unwrap();
    let plan = c.root.plan(&d.id).unwrap();
    let per_worker: Vec<usize> = plan.leaves.iter().map(|l| l.micropartitions.len()).collect();
    assert_eq!(per_worker, vec![2, 2]);
    assert_eq!(rows(&c.root, &d.id), 100);
    let schema = c.root.schema(&d.id).unwrap();
    assert_eq!(schema.0.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["id", "x", "cat"]);
}

#[test]
fn registration_rules() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 1, 5, 2);
    let c = Root::in_process(config(1, 1_000)).unwrap();
    let err = c.root.register(Source::new(format!("{}/*.parquet", dir.path().display()))).unwrap_err();
    assert_eq!(err.code(), "BAD_REQUEST");
    let a = c.root.register(Source::new(glob(&dir))).unwrap();
    let b = c.root.register(Source::new(glob(&dir))).unwrap();
    assert_ne!(a.id, b.id);
    let err = c
        .root
        .derive(LineageOp::Filter { parent: "d77".into(), predicate: "true".into() }, 0)
        .unwrap_err();
    assert_eq!(err.code(), "UNKNOWN_DATASET");
    let err = c
        .root
        .derive(LineageOp::Filter { parent: a.id.clone(), predicate: "x >>> 1".into() }, 0)
        .unwrap_err();
    assert_eq!(err.code(), "BAD_REQUEST");
}

#[test]
fn trivial_filter_keeps_every_row() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 2, 40, 3);
    let c = Root::in_process(config(2, 15)).unwrap();
    let d = c.root.register(Source::new(glob(&dir))).unwrap();
    let f = c.root.derive(LineageOp::Filter { parent: d.id.clone(), predicate: "true".into() }, 0).unwrap();
    assert_eq!(rows(&c.root, &f.id), rows(&c.root, &d.id));
    let none = c.root.derive(LineageOp::Filter { parent: d.id.clone(), predicate: "false".into() }, 0).unwrap();
    assert_eq!(rows(&c.root, &none.id), 0);
}

fn chain(root: &Root, dir: &tempfile::TempDir) -> [String; 3] {
    let d = root.register(Source::new(glob(dir))).unwrap();
    let f = root.derive(LineageOp::Filter { parent: d.id.clone(), predicate: "cat != 'eel'".into() }, 0).unwrap();
    let m = root
        .derive(LineageOp::MapColumn { parent: f.id.clone(), expr: "x * 2 - id".into(), name: "y".into() }, 0)
        .unwrap();
    [d.id, f.id, m.id]
}

fn chain_answers(root: &Root, ids: &[String; 3]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for (id, col) in ids.iter().zip(["x", "x", "y"]) {
        out.push(codec::to_binary(&finish(root.execute(id, moments(col)).unwrap()).summary));
        let mut hh = SketchRequest::new(SketchKind::HeavyHittersMg, &["cat"]);
        hh.top_k = 4;
        out.push(codec::to_binary(&finish(root.execute(id, hh).unwrap()).summary));
    }
    out
}

#[test]
fn derived_chain_survives_losing_soft_state() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 3, 60, 4);
    let c = Root::in_process(config(2, 25)).unwrap();
    let ids = chain(&c.root, &dir);
    let before = chain_answers(&c.root, &ids);
    c.root.drop_soft_state().unwrap();
    assert!(c.workers.iter().all(|w| !w.resident(&ids[2])));
    assert_eq!(chain_answers(&c.root, &ids), before);

    // Losing only the filtered dataset rebuilds it from its resident parent.
    let replays = |c: &vizketch_engine::LocalCluster| -> u64 {
        c.workers.iter().map(|w| w.stats.replays.load(Ordering::SeqCst)).sum()
    };
    c.root.set_cache_enabled(false);
    let r0 = replays(&c);
    for w in &c.workers {
        w.evict(&ids[1]);
    }
    let again = codec::to_binary(&finish(c.root.execute(&ids[1], moments("x")).unwrap()).summary);
    assert_eq!(again, before[2]);
    assert_eq!(replays(&c) - r0, 2);
}

#[test]
fn identical_requests_run_once() {
    let dir = tempfile::tempdir().unwrap();
    write_shards(dir.path(), 2, 50, 5);
    let c = Root::in_process(config(1, 20)).unwrap();
    let d = c.root.register(Source::new(glob(&dir))).unwrap();
    let runs = || c.root.stats().executions.load(Ordering::SeqCst);
    finish(c.root.execute(&d.id, moments("x")).unwrap());
    finish(c.root.execute(&d.id, moments("x")).unwrap());
    assert_eq!(runs(), 1);
    let mut a = sampled_hist("x", 100, 1);
    a.sample_size = Some(20);
    let mut b = a.clone();
    b.seed = 2;
    let a = finish(c.root.execute(&d.id, a).unwrap());
    let b = finish(c.root.execute(&d.id, b).unwrap());
    assert_eq!(runs(), 3);
    assert_ne!(a.summary, b.summary);
}

#[test]
fn deleted_source_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_shards(dir.path(), 2, 10, 6);
    let c = Root::in_process(config(1, 20)).unwrap();
    let early = c.root.register(Source::new(glob(&dir))).unwrap();
    let late = c.root.register(Source::new(glob(&dir))).unwrap();
    assert_eq!(rows(&c.root, &late.id), 20);
    std::fs::remove_file(&files[1]).unwrap();
    let err = c.root.execute(&early.id, moments("x")).unwrap().wait().unwrap_err();
    assert_eq!(err.code(), "SOURCE_MISSING");

    // Resident data keeps answering; rebuilding after eviction does not.
    finish(c.root.execute(&late.id, moments("x")).unwrap());
    c.root.drop_soft_state().unwrap();
    let err = c.root.execute(&late.id, moments("x")).unwrap().wait().unwrap_err();
    assert_eq!(err.code(), "SOURCE_MISSING");
    std::fs::remove_file(&files[0]).unwrap();
    let err = c.root.execute(&late.id, moments("id")).unwrap().wait().unwrap_err();
    assert_eq!(err.code(), "SOURCE_MISSING");
}

fn logged(config_dir: &tempfile::TempDir, workers: usize) -> vizketch_engine::EngineConfig {
    let mut cfg = config(workers, 25);
    cfg.redo_log = Some(config_dir.path().join("redo.log"));
    cfg
}

#[test]
fn empty_log_gives_empty_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let c = Root::in_process(logged(&dir, 1)).unwrap();
    assert!(c.root.datasets().is_empty());
    assert_eq!(c.root.recovery().entries, 0);
}

#[test]
fn restarted_root_replays_lineage_on_demand() {
    let data = tempfile::tempdir().unwrap();
    let state = tempfile::tempdir().unwrap();
    write_shards(data.path(), 2, 40, 7);
    let (ids, before) = {
        let c = Root::in_process(logged(&state, 1)).unwrap();
        let ids = chain(&c.root, &data);
        let before = chain_answers(&c.root, &ids);
        (ids, before)
    };
    let c = Root::in_process(logged(&state, 1)).unwrap();
    assert_eq!(c.root.datasets().len(), 3);
    assert_eq!(c.workers[0].stats.replays.load(Ordering::SeqCst), 0);
    finish(c.root.execute(&ids[1], moments("x")).unwrap());
    assert_eq!(c.workers[0].stats.replays.load(Ordering::SeqCst), 2);
    assert_eq!(chain_answers(&c.root, &ids), before);
    // Ids keep counting from where the log ended.
    let next = c.root.register(Source::new(glob(&data))).unwrap();
    assert!(!ids.contains(&next.id));
}

#[test]
fn torn_log_tail_drops_only_the_last_entry() {
    let data = tempfile::tempdir().unwrap();
    let state = tempfile::tempdir().unwrap();
    write_shards(data.path(), 1, 10, 8);
    {
        let c = Root::in_process(logged(&state, 1)).unwrap();
        chain(&c.root, &data);
    }
    let path = state.path().join("redo.log");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 7]).unwrap();
    let c = Root::in_process(logged(&state, 1)).unwrap();
    assert_eq!(c.root.recovery().entries, 2);
    assert_eq!(c.root.recovery().truncated_at, Some(3));
    assert_eq!(c.root.datasets().len(), 2);
}

#[test]
fn datasets_are_logged_before_they_are_acknowledged() {
    let data = tempfile::tempdir().unwrap();
    let state = tempfile::tempdir().unwrap();
    write_shards(data.path(), 1, 10, 9);
    let kept;
    {
        let c = Root::in_process(logged(&state, 1)).unwrap();
        kept = c.root.register(Source::new(glob(&data))).unwrap();
        c.root.set_failpoint(Failpoint::BeforeAppend);
        let err = c.root.derive(LineageOp::Filter { parent: kept.id.clone(), predicate: "true".into() }, 0);
        assert_eq!(err.unwrap_err().code(), "LOG_FAILURE");
        assert_eq!(c.root.datasets().len(), 1);
        c.root.set_failpoint(Failpoint::AfterAppend);
        assert!(c.root.derive(LineageOp::Filter { parent: kept.id.clone(), predicate: "true".into() }, 0).is_err());
    }
    let c = Root::in_process(logged(&state, 1)).unwrap();
    let ids: Vec<String> = c.root.datasets().into_iter().map(|d| d.id).collect();
    assert_eq!(ids.len(), 2);
    assert!(ids.contains(&kept.id));
}
