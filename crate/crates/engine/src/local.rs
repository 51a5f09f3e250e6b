//! A worker that holds shards in memory and runs micropartition work on
//! its own pool. Everything it holds is soft state rebuilt from lineage.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::Sender;
use parking_lot::{Mutex, RwLock};
use vizketch_core::io::{self, FileFormat};
use vizketch_core::{identity, summarize, CoreError, Expr, Predicate, SketchKind, Table};

use crate::cache::Cache;
use crate::config::EngineConfig;
use crate::error::{EngineError, Result};
use crate::lineage::{DatasetRef, Lineage, LineageOp, Source};
use crate::node::{Arrival, Description, ExecutionId, Gather, Job, Node, Update};
use crate::partition::{split_shard, Micropartition};
use crate::pool::WorkerPool;

/// Test hook: how long to stall before summarizing a micropartition.
pub type DelayFn = dyn Fn(&Micropartition) -> Option<Duration> + Send + Sync;

struct Shard {
    table: Table,
    parts: Vec<Micropartition>,
}

struct Materialized {
    shards: Vec<Shard>,
}

#[derive(Debug, Default)]
pub struct WorkerStats {
    /// Micropartitions summarized (cache hits excluded).
    pub executed: AtomicU64,
    /// Lineage steps rebuilt.
    pub replays: AtomicU64,
    /// Shard files parsed.
    pub loads: AtomicU64,
}

const REMEMBERED_CANCELS: usize = 4096;

pub struct LocalWorker {
    index: usize,
    workers: usize,
    micropartition_rows: usize,
    interval: Duration,
    pool: WorkerPool,
    datasets: Mutex<HashMap<String, Arc<Materialized>>>,
    /// Serializes materialization so concurrent requesters share one build.
    building: Mutex<()>,
    files: Cache<PathBuf, Table>,
    summaries: Arc<Cache<(String, String, u64), vizketch_core::Summary>>,
    running: Mutex<HashMap<u128, Sender<Arrival>>>,
    cancelled: Arc<Mutex<VecDeque<u128>>>,
    delay: RwLock<Option<Arc<DelayFn>>>,
    pub stats: Arc<WorkerStats>,
}

impl LocalWorker {
    /// Worker `index` of `workers`.
    pub fn new(index: usize, workers: usize, config: &EngineConfig) -> LocalWorker {
        LocalWorker {
            index,
            workers: workers.max(1),
            micropartition_rows: config.micropartition_rows,
            interval: config.batch_interval(),
            pool: WorkerPool::new(config.pool_width()),
            datasets: Mutex::new(HashMap::new()),
            building: Mutex::new(()),
            files: Cache::new(config.cache_idle(), config.data_cache_bytes),
            summaries: Arc::new(Cache::new(config.cache_idle(), config.cache_bytes)),
            running: Mutex::new(HashMap::new()),
            cancelled: Arc::new(Mutex::new(VecDeque::new())),
            delay: RwLock::new(None),
            stats: Arc::new(WorkerStats::default()),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn set_delay(&self, delay: Option<Arc<DelayFn>>) {
        *self.delay.write() = delay;
    }

    /// Forgets one materialized dataset (its parents stay).
    pub fn evict(&self, dataset: &str) {
        self.datasets.lock().remove(dataset);
        self.summaries.retain(|(d, _, _)| d != dataset);
    }

    pub fn resident(&self, dataset: &str) -> bool {
        self.datasets.lock().contains_key(dataset)
    }

    /// Shard files of `source` this worker is responsible for, sorted.
    pub fn resolve(&self, source: &Source) -> Result<Vec<PathBuf>> {
        let own = source.glob.contains("{worker}");
        let pattern = source.glob.replace("{worker}", &self.index.to_string());
        let mut paths: Vec<PathBuf> = glob::glob(&pattern)
            .map_err(|e| EngineError::BadRequest(format!("bad glob `{}`: {e}", source.glob)))?
            .filter_map(|p| p.ok())
            .filter(|p| p.is_file() && !is_schema_file(p))
            .collect();
        paths.sort();
        if !own {
            paths = paths
                .into_iter()
                .enumerate()
                .filter(|(i, _)| i % self.workers == self.index)
                .map(|(_, p)| p)
                .collect();
        }
        Ok(paths)
    }

    fn load_file(&self, path: &Path, source: &Source) -> Result<Table> {
        self.files
            .lookup_or_compute(path.to_owned(), table_bytes, || {
                self.stats.loads.fetch_add(1, Ordering::Relaxed);
                let schema = match &source.schema {
                    Some(p) => Some(io::read_schema(p)?),
                    None => None,
                };
                let format = match source.format {
                    Some(f) => f,
                    None => FileFormat::from_path(path),
                };
                Ok::<_, CoreError>(match format {
                    FileFormat::Csv => io::load_csv(path, schema.as_ref(), source.csv_options())?,
                    FileFormat::Jsonl => io::load_jsonl(path, schema.as_ref())?,
                })
            })
            .map_err(EngineError::from)
    }

    fn build(&self, step: &DatasetRef, parent: Option<&Materialized>) -> Result<Materialized> {
        let source_error = |e: EngineError| match e {
            EngineError::Core(CoreError::Io { path, source }) => EngineError::SourceMissing {
                dataset: step.id.clone(),
                detail: format!("{path}: {source}"),
            },
            other => other,
        };
        match &step.op {
            LineageOp::Load { source } => {
                let mut shards = Vec::new();
                for (i, path) in self.resolve(source)?.into_iter().enumerate() {
                    let table = self.load_file(&path, source).map_err(source_error)?;
                    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
                    let parts = split_shard(self.index, i, &name, table.physical_rows(), self.micropartition_rows);
                    shards.push(Shard { table, parts });
                }
                Ok(Materialized { shards })
            }
            LineageOp::Filter { predicate, .. } => {
                let parent = parent.ok_or_else(|| EngineError::UnknownDataset(step.op.parent().unwrap_or("").into()))?;
                let p = Predicate::parse(predicate)?;
                let shards = parent
                    .shards
                    .iter()
                    .map(|s| Ok(Shard { table: s.table.filter(&p)?, parts: s.parts.clone() }))
                    .collect::<Result<_>>()?;
                Ok(Materialized { shards })
            }
            LineageOp::MapColumn { expr, name, .. } => {
                let parent = parent.ok_or_else(|| EngineError::UnknownDataset(step.op.parent().unwrap_or("").into()))?;
                let e = Expr::parse(expr)?;
                let shards = parent
                    .shards
                    .iter()
                    .map(|s| Ok(Shard { table: s.table.map_column(&e, name)?, parts: s.parts.clone() }))
                    .collect::<Result<_>>()?;
                Ok(Materialized { shards })
            }
        }
    }

    /// Builds whatever part of `lineage` is not resident, root first.
    fn materialize(&self, lineage: &Lineage) -> Result<Arc<Materialized>> {
        let target = lineage.last().ok_or_else(|| EngineError::BadRequest("empty lineage".into()))?;
        if let Some(m) = self.datasets.lock().get(&target.id) {
            return Ok(m.clone());
        }
        let _guard = self.building.lock();
        let mut parent: Option<Arc<Materialized>> = None;
        for step in lineage {
            let resident = self.datasets.lock().get(&step.id).cloned();
            let m = match resident {
                Some(m) => m,
                None => {
                    let m = Arc::new(self.build(step, parent.as_deref())?);
                    self.stats.replays.fetch_add(1, Ordering::Relaxed);
                    self.datasets.lock().insert(step.id.clone(), m.clone());
                    m
                }
            };
            parent = Some(m);
        }
        Ok(parent.expect("lineage is not empty"))
    }

    fn was_cancelled(&self, id: u128) -> bool {
        self.cancelled.lock().contains(&id)
    }
}

fn is_schema_file(p: &Path) -> bool {
    p.file_name().is_some_and(|n| n == "schema.json")
}

fn table_bytes(t: &Table) -> usize {
    t.physical_rows() * t.columns().len() * 9 + 64
}

impl Node for LocalWorker {
    fn execute(&self, job: &Job, sink: &mut dyn FnMut(Update)) -> Result<()> {
        let key = job.execution.key();
        if self.was_cancelled(key) {
            return Err(EngineError::Cancelled);
        }
        let (tx, rx) = crossbeam_channel::unbounded();
        self.running.lock().insert(key, tx.clone());
        let result = self.run(job, tx, rx, sink);
        self.running.lock().remove(&key);
        result
    }

    fn cancel(&self, execution: ExecutionId) {
        let key = execution.key();
        {
            let mut c = self.cancelled.lock();
            if !c.contains(&key) {
                c.push_back(key);
                if c.len() > REMEMBERED_CANCELS {
                    c.pop_front();
                }
            }
        }
        self.pool.purge(key);
        if let Some(tx) = self.running.lock().get(&key) {
            let _ = tx.send(Arrival::Cancel);
        }
    }

    fn describe(&self, lineage: &Lineage, materialize: bool) -> Result<Description> {
        if !materialize {
            let load = lineage.first().ok_or_else(|| EngineError::BadRequest("empty lineage".into()))?;
            let LineageOp::Load { source } = &load.op else {
                return Err(EngineError::BadRequest("lineage must start with a load".into()));
            };
            return Ok(Description { shards: self.resolve(source)?.len(), ..Description::default() });
        }
        let m = self.materialize(lineage)?;
        Ok(Description {
            shards: m.shards.len(),
            schema: m.shards.first().map(|s| s.table.schema()),
            micropartitions: m.shards.iter().flat_map(|s| s.parts.iter().cloned()).collect(),
        })
    }

    fn reset(&self) -> Result<()> {
        self.datasets.lock().clear();
        self.files.clear();
        self.summaries.clear();
        Ok(())
    }
}

impl LocalWorker {
    fn run(&self, job: &Job, tx: Sender<Arrival>, rx: crossbeam_channel::Receiver<Arrival>, sink: &mut dyn FnMut(Update)) -> Result<()> {
        let data = self.materialize(&job.lineage)?;
        let req = Arc::new(job.request.clone());
        let parts: Vec<(Table, Micropartition)> = data
            .shards
            .iter()
            .flat_map(|s| s.parts.iter().map(|p| (s.table.restrict(p.rows.clone()), p.clone())))
            .collect();
        if parts.is_empty() {
            sink(Update { summary: identity(&req)?, leaves_done: 0, leaves_total: 0 });
            return Ok(());
        }
        let cacheable = req.kind != SketchKind::SaveTable;
        let req_key = serde_json::to_string(&*req).expect("requests serialize");
        let dataset = job.dataset().to_owned();
        let empty = identity(&req)?;
        let slots = vec![Some(Update { summary: empty, leaves_done: 0, leaves_total: 1 }); parts.len()];
        let key = job.execution.key();
        let cancelled = Arc::new(AtomicBool::new(false));
        for (i, (table, part)) in parts.into_iter().enumerate() {
            let cache_key = (dataset.clone(), req_key.clone(), part.key);
            if cacheable {
                if let Some(s) = self.summaries.get(&cache_key) {
                    let _ = tx.send(Arrival::Progress(i, Update { summary: s, leaves_done: 1, leaves_total: 1 }));
                    let _ = tx.send(Arrival::Finished(i, Ok(())));
                    continue;
                }
            }
            let tx = tx.clone();
            let req = req.clone();
            let delay = self.delay.read().clone();
            let cancelled = cancelled.clone();
            let cancel_list = self.cancelled.clone();
            let stats = self.stats.clone();
            let summaries = self.summaries.clone();
            self.pool.submit(key, move || {
                let stop = || cancelled.load(Ordering::SeqCst) || cancel_list.lock().contains(&key);
                if stop() {
                    return;
                }
                if let Some(f) = delay.as_ref() {
                    if let Some(d) = f(&part) {
                        std::thread::sleep(d);
                    }
                    // The cancel may have come in while this one stalled.
                    if stop() {
                        return;
                    }
                }
                stats.executed.fetch_add(1, Ordering::Relaxed);
                let r = summarize(&table, &req, part.key).map_err(EngineError::from);
                let r = r.map(|s| {
                    if cacheable {
                        let bytes = vizketch_core::sketch::codec::to_binary(&s).len();
                        summaries.insert(cache_key, s.clone(), bytes);
                    }
                    let _ = tx.send(Arrival::Progress(i, Update { summary: s, leaves_done: 1, leaves_total: 1 }));
                });
                let _ = tx.send(Arrival::Finished(i, r));
            });
        }
        drop(tx);
        let gather = Gather { request: &job.request, slots, interval: self.interval };
        let result = gather.run(rx, sink);
        if result.is_err() {
            cancelled.store(true, Ordering::SeqCst);
            self.pool.purge(key);
        }
        result
    }
}
