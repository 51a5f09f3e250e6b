//! The root of the execution tree: dataset catalog, redo log, computation
//! cache, and execution streams.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{Receiver, Sender};
use parking_lot::{Mutex, RwLock};
use uuid::Uuid;
use vizketch_core::sketch::codec;
use vizketch_core::{Expr, Predicate, Schema, SketchKind, SketchRequest, Summary};

use crate::cache::Cache;
use crate::config::EngineConfig;
use crate::error::{EngineError, Result};
use crate::lineage::{DatasetRef, Lineage, LineageOp, Source};
use crate::local::LocalWorker;
use crate::node::{ExecutionId, Job, Node, Update};
use crate::prepare::{complete_request, needs_preparation};
use crate::redo::{Failpoint, LogOp, RedoLog};
use crate::remote::RemoteNode;
use crate::tree::{plan, TreeTopology};

#[derive(Clone, Debug, PartialEq)]
pub struct PartialResult {
    pub execution: ExecutionId,
    pub summary: Summary,
    pub leaves_done: u64,
    pub leaves_total: u64,
    pub sequence: u64,
    /// The request as executed, with preparation results filled in.
    pub request: Arc<SketchRequest>,
}

impl PartialResult {
    pub fn progress(&self) -> f64 {
        if self.leaves_total == 0 {
            1.0
        } else {
            self.leaves_done as f64 / self.leaves_total as f64
        }
    }
}

#[derive(Debug)]
pub enum Event {
    Partial(PartialResult),
    /// Terminal: the complete result.
    Complete(PartialResult),
    Cancelled(ExecutionId),
    Failed(ExecutionId, EngineError),
}

impl Event {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Event::Partial(_))
    }
}

/// A running execution's result stream: partials, then one terminal event.
pub struct Execution {
    pub id: ExecutionId,
    events: Receiver<Event>,
}

impl Execution {
    pub fn events(&self) -> &Receiver<Event> {
        &self.events
    }

    /// Every event up to and including the terminal one.
    pub fn collect(self) -> Vec<Event> {
        let mut out = Vec::new();
        for e in self.events.iter() {
            let end = e.is_terminal();
            out.push(e);
            if end {
                break;
            }
        }
        out
    }

    /// The final result, skipping partials.
    pub fn wait(self) -> Result<PartialResult> {
        match self.collect().pop() {
            Some(Event::Complete(r)) => Ok(r),
            Some(Event::Cancelled(_)) => Err(EngineError::Cancelled),
            Some(Event::Failed(_, e)) => Err(e),
            _ => Err(EngineError::Protocol("stream ended without a terminal event".into())),
        }
    }
}

#[derive(Debug, Default)]
pub struct RootStats {
    /// Trees actually executed (cache hits excluded).
    pub executions: AtomicU64,
    pub cache_hits: AtomicU64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecoveryReport {
    pub entries: usize,
    /// Line of the first corrupt entry; it and everything after were dropped.
    pub truncated_at: Option<usize>,
}

struct Active {
    id: ExecutionId,
    cancelled: Arc<AtomicBool>,
}

struct Inner {
    config: EngineConfig,
    tree: Arc<dyn Node>,
    topology: TreeTopology,
    catalog: RwLock<BTreeMap<String, DatasetRef>>,
    /// Serializes catalog changes so ids follow log order.
    registering: Mutex<()>,
    log: RedoLog,
    recovery: RecoveryReport,
    cache: Cache<(String, String), (Summary, u64)>,
    cache_enabled: AtomicBool,
    active: Mutex<HashMap<Uuid, Active>>,
    stats: RootStats,
}

/// Cheap to clone; clones share state.
#[derive(Clone)]
pub struct Root {
    inner: Arc<Inner>,
}

/// A root with in-process workers, plus handles to them.
pub struct LocalCluster {
    pub root: Root,
    pub workers: Vec<Arc<LocalWorker>>,
}

impl Root {
    /// Builds the tree over `workers` and, when the config names a redo
    /// log, reads it back. Nothing is replayed until a dataset is used.
    pub fn new(config: EngineConfig, workers: Vec<Arc<dyn Node>>) -> Result<Root> {
        let mut topology = plan(workers.len(), config.fanout)?;
        topology.fanout = config.fanout.max(2);
        let tree = topology.build(&workers, config.batch_interval());
        let (log, recovered) = match &config.redo_log {
            Some(path) => RedoLog::open(path)?,
            None => (RedoLog::in_memory(), Default::default()),
        };
        let mut catalog = BTreeMap::new();
        for e in &recovered.entries {
            if let LogOp::Dataset { dataset } = &e.op {
                catalog.insert(dataset.id.clone(), dataset.clone());
            }
        }
        if let Some(line) = recovered.truncated_at {
            log::warn!("redo log truncated at line {line}; kept {} entries", recovered.entries.len());
        }
        let recovery = RecoveryReport { entries: recovered.entries.len(), truncated_at: recovered.truncated_at };
        Ok(Root {
            inner: Arc::new(Inner {
                cache: Cache::new(config.cache_idle(), config.cache_bytes),
                config,
                tree,
                topology,
                catalog: RwLock::new(catalog),
                registering: Mutex::new(()),
                log,
                recovery,
                cache_enabled: AtomicBool::new(true),
                active: Mutex::new(HashMap::new()),
                stats: RootStats::default(),
            }),
        })
    }

    /// `config.local_workers` in-process workers.
    pub fn in_process(config: EngineConfig) -> Result<LocalCluster> {
        let n = config.local_workers.max(1);
        let workers: Vec<Arc<LocalWorker>> = (0..n).map(|i| Arc::new(LocalWorker::new(i, n, &config))).collect();
        let nodes = workers.iter().map(|w| w.clone() as Arc<dyn Node>).collect();
        Ok(LocalCluster { root: Root::new(config, nodes)?, workers })
    }

    /// Workers reached over TCP at `config.workers`.
    pub fn connect(config: EngineConfig) -> Result<Root> {
        let backoff = Duration::from_millis(config.retry_backoff_ms);
        let nodes = config
            .workers
            .iter()
            .map(|a| Arc::new(RemoteNode::new(a.clone(), config.retries, backoff)) as Arc<dyn Node>)
            .collect();
        Root::new(config, nodes)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.inner.config
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.inner.topology
    }

    pub fn stats(&self) -> &RootStats {
        &self.inner.stats
    }

    pub fn recovery(&self) -> &RecoveryReport {
        &self.inner.recovery
    }

    pub fn set_failpoint(&self, fp: Failpoint) {
        self.inner.log.set_failpoint(fp);
    }

    pub fn set_cache_enabled(&self, on: bool) {
        self.inner.cache_enabled.store(on, Ordering::SeqCst);
        if !on {
            self.inner.cache.clear();
        }
    }

    /// Forgets every cached object at the root and on the workers.
    pub fn drop_soft_state(&self) -> Result<()> {
        self.inner.cache.clear();
        self.inner.tree.reset()
    }

    pub fn datasets(&self) -> Vec<DatasetRef> {
        self.inner.catalog.read().values().cloned().collect()
    }

    pub fn dataset(&self, id: &str) -> Result<DatasetRef> {
        self.inner.catalog.read().get(id).cloned().ok_or_else(|| EngineError::UnknownDataset(id.into()))
    }

    /// The chain of datasets from the source load down to `id`.
    pub fn lineage(&self, id: &str) -> Result<Lineage> {
        let catalog = self.inner.catalog.read();
        let mut chain = Vec::new();
        let mut cur = Some(id.to_owned());
        while let Some(c) = cur {
            let d = catalog.get(&c).ok_or_else(|| EngineError::UnknownDataset(c.clone()))?;
            cur = d.op.parent().map(str::to_owned);
            chain.push(d.clone());
        }
        chain.reverse();
        Ok(chain)
    }

    fn add(&self, op: LineageOp, seed: u64) -> Result<DatasetRef> {
        let _g = self.inner.registering.lock();
        let dataset = DatasetRef { id: format!("d{}", self.inner.log.peek_seq()), op, seed };
        self.inner.log.append(LogOp::Dataset { dataset: dataset.clone() }, seed)?;
        self.inner.catalog.write().insert(dataset.id.clone(), dataset.clone());
        Ok(dataset)
    }

    /// Registers shard files. Workers load them on first use.
    pub fn register(&self, mut source: Source) -> Result<DatasetRef> {
        source.shards = None;
        let probe = DatasetRef { id: String::new(), op: LineageOp::Load { source: source.clone() }, seed: 0 };
        let d = self.inner.tree.describe(&vec![probe], false)?;
        if d.shards == 0 {
            return Err(EngineError::BadRequest(format!("`{}` matches no files", source.glob)));
        }
        source.shards = Some(d.shards);
        self.add(LineageOp::Load { source }, 0)
    }

    /// Derives a filtered or computed-column dataset; materialized lazily.
    pub fn derive(&self, op: LineageOp, seed: u64) -> Result<DatasetRef> {
        match &op {
            LineageOp::Load { .. } => return Err(EngineError::BadRequest("use register to load data".into())),
            LineageOp::Filter { parent, predicate } => {
                self.dataset(parent)?;
                Predicate::parse(predicate)?;
            }
            LineageOp::MapColumn { parent, expr, .. } => {
                self.dataset(parent)?;
                Expr::parse(expr)?;
            }
        }
        self.add(op, seed)
    }

    pub fn schema(&self, id: &str) -> Result<Schema> {
        let lineage = self.lineage(id)?;
        schema_of(&self.inner, &lineage)
    }

    /// The tree with the dataset's micropartitions assigned to leaves.
    pub fn plan(&self, id: &str) -> Result<TreeTopology> {
        let lineage = self.lineage(id)?;
        let d = self.inner.tree.describe(&lineage, true)?;
        let mut t = self.inner.topology.clone();
        t.assign(d.micropartitions);
        Ok(t)
    }

    /// Runs `req` exactly as given, as one tree.
    pub fn execute(&self, dataset: &str, req: SketchRequest) -> Result<Execution> {
        self.start(dataset, req, false)
    }

    /// Runs the preparation round when `req` needs one, then the rendering
    /// round; only the rendering round streams partials.
    pub fn query(&self, dataset: &str, req: SketchRequest) -> Result<Execution> {
        self.start(dataset, req, true)
    }

    /// Discards queued work of `id`. Unknown or finished ids are a no-op;
    /// returns whether the execution was running.
    pub fn cancel(&self, id: Uuid) -> bool {
        let found = self.inner.active.lock().get(&id).map(|a| (a.id, a.cancelled.clone()));
        match found {
            Some((exec, flag)) => {
                flag.store(true, Ordering::SeqCst);
                self.inner.tree.cancel(exec);
                true
            }
            None => false,
        }
    }

    fn start(&self, dataset: &str, req: SketchRequest, prepare: bool) -> Result<Execution> {
        let lineage = self.lineage(dataset)?;
        self.inner.log.append(LogOp::Query { dataset: dataset.into(), request: Box::new(req.clone()) }, req.seed)?;
        let id = ExecutionId::new(req.seed);
        let cancelled = Arc::new(AtomicBool::new(false));
        self.inner.active.lock().insert(id.id, Active { id, cancelled: cancelled.clone() });
        let (tx, rx) = crossbeam_channel::unbounded();
        let inner = self.inner.clone();
        std::thread::Builder::new()
            .name(format!("exec-{}", id.id))
            .spawn(move || {
                let terminal = match drive(&inner, id, &lineage, req, prepare, &cancelled, &tx) {
                    Ok(r) => Event::Complete(r),
                    Err(EngineError::Cancelled) => Event::Cancelled(id),
                    Err(e) => Event::Failed(id, e),
                };
                inner.active.lock().remove(&id.id);
                let _ = tx.send(terminal);
            })
            .map_err(|e| EngineError::Protocol(e.to_string()))?;
        Ok(Execution { id, events: rx })
    }
}

fn schema_of(inner: &Inner, lineage: &Lineage) -> Result<Schema> {
    let d = inner.tree.describe(lineage, true)?;
    let load = lineage.first().map(|l| l.id.clone()).unwrap_or_default();
    if let Some(LineageOp::Load { source: Source { shards: Some(n), glob, .. } }) = lineage.first().map(|l| &l.op) {
        if d.shards != *n {
            return Err(EngineError::SourceMissing {
                dataset: load,
                detail: format!("`{glob}` registered with {n} files, found {}", d.shards),
            });
        }
    }
    d.schema.ok_or_else(|| EngineError::SourceMissing { dataset: load, detail: "no shard files found".into() })
}

fn drive(
    inner: &Inner,
    id: ExecutionId,
    lineage: &Lineage,
    req: SketchRequest,
    prepare: bool,
    cancelled: &AtomicBool,
    tx: &Sender<Event>,
) -> Result<PartialResult> {
    if cancelled.load(Ordering::SeqCst) {
        return Err(EngineError::Cancelled);
    }
    let schema = schema_of(inner, lineage)?;
    let req = if prepare && needs_preparation(&req) {
        complete_request(&req, &schema, &mut |r| {
            r.validate(&schema)?;
            round(inner, id, lineage, &r, 1, cancelled, &mut |_| {}).map(|u| u.summary)
        })?
    } else {
        req
    };
    req.validate(&schema)?;
    let request = Arc::new(req.clone());
    let mut sequence = 0;
    let last = round(inner, id, lineage, &req, 2, cancelled, &mut |u| {
        sequence += 1;
        let _ = tx.send(Event::Partial(PartialResult {
            execution: id,
            summary: u.summary.clone(),
            leaves_done: u.leaves_done,
            leaves_total: u.leaves_total,
            sequence,
            request: request.clone(),
        }));
    })?;
    Ok(PartialResult {
        execution: id,
        summary: last.summary,
        leaves_done: last.leaves_done,
        leaves_total: last.leaves_total,
        sequence: sequence + 1,
        request,
    })
}

/// Runs one tree, or answers from the computation cache.
fn round(
    inner: &Inner,
    id: ExecutionId,
    lineage: &Lineage,
    req: &SketchRequest,
    round: u32,
    cancelled: &AtomicBool,
    on_partial: &mut dyn FnMut(&Update),
) -> Result<Update> {
    if cancelled.load(Ordering::SeqCst) {
        return Err(EngineError::Cancelled);
    }
    let dataset = lineage.last().map(|d| d.id.clone()).unwrap_or_default();
    let cacheable = req.kind != SketchKind::SaveTable && inner.cache_enabled.load(Ordering::SeqCst);
    let key = (dataset, serde_json::to_string(req).expect("requests serialize"));
    if cacheable {
        if let Some((summary, total)) = inner.cache.get(&key) {
            inner.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Update { summary, leaves_done: total, leaves_total: total });
        }
    }
    inner.stats.executions.fetch_add(1, Ordering::Relaxed);
    let job = Job { execution: id, lineage: lineage.clone(), request: req.clone(), round };
    let mut last: Option<Update> = None;
    inner.tree.execute(&job, &mut |u| {
        if u.leaves_done > 0 && u.leaves_done < u.leaves_total {
            on_partial(&u);
        }
        last = Some(u);
    })?;
    let last = last.ok_or_else(|| EngineError::Protocol("tree finished without a result".into()))?;
    if last.leaves_total == 0 {
        return Err(EngineError::SourceMissing {
            dataset: lineage.first().map(|l| l.id.clone()).unwrap_or_default(),
            detail: "no shard files found".into(),
        });
    }
    if cacheable {
        let bytes = codec::to_binary(&last.summary).len();
        if bytes <= inner.config.summary_cap_bytes {
            inner.cache.insert(key, (last.summary.clone(), last.leaves_total), bytes);
        }
    }
    Ok(last)
}
