//! The execution-tree node contract and the arrival-merging loop shared by
//! leaves and aggregators.

use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError};
use serde::{Deserialize, Serialize};
use uuid::Uuid;
use vizketch_core::{identity, Schema, SketchRequest, Summary};

use crate::error::{EngineError, Result};
use crate::lineage::Lineage;
use crate::partition::Micropartition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecutionId {
    pub id: Uuid,
    /// Master seed; recorded so the execution can be replayed.
    pub seed: u64,
}

impl ExecutionId {
    pub fn new(seed: u64) -> ExecutionId {
        ExecutionId { id: Uuid::new_v4(), seed }
    }

    pub fn key(&self) -> u128 {
        self.id.as_u128()
    }
}

/// One round of one execution, as broadcast down the tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Job {
    pub execution: ExecutionId,
    /// Chain of datasets ending with the one to summarize, so any node
    /// that lost it can rebuild it.
    pub lineage: Lineage,
    pub request: SketchRequest,
    pub round: u32,
}

impl Job {
    pub fn dataset(&self) -> &str {
        self.lineage.last().map_or("", |d| d.id.as_str())
    }
}

/// The merged state of a subtree: everything its finished leaves produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub summary: Summary,
    pub leaves_done: u64,
    pub leaves_total: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub shards: usize,
    /// Present once the dataset was materialized and has at least one shard.
    pub schema: Option<Schema>,
    pub micropartitions: Vec<Micropartition>,
}

pub trait Node: Send + Sync {
    /// Runs `job` over this subtree. `sink` receives cumulative updates:
    /// the first one as soon as the leaf count is known, the last one when
    /// every leaf is done.
    fn execute(&self, job: &Job, sink: &mut dyn FnMut(Update)) -> Result<()>;

    /// Out-of-band: discards queued work of `execution`. Unknown ids are fine.
    fn cancel(&self, execution: ExecutionId);

    /// Counts shards; with `materialize` also builds the dataset and reports
    /// its schema and micropartitions.
    fn describe(&self, lineage: &Lineage, materialize: bool) -> Result<Description>;

    /// Drops all soft state, as if the process had restarted.
    fn reset(&self) -> Result<()>;
}

pub(crate) enum Arrival {
    Progress(usize, Update),
    Finished(usize, Result<()>),
    Cancel,
}

/// Collects arrivals from a node's inputs and emits merged updates: one
/// immediately once every input has reported, then at most one per
/// batching interval, then the final one.
pub(crate) struct Gather<'a> {
    pub request: &'a SketchRequest,
    pub slots: Vec<Option<Update>>,
    pub interval: Duration,
}

impl Gather<'_> {
    fn snapshot(&self) -> Result<Update> {
        let mut summary = identity(self.request)?;
        let (mut done, mut total) = (0, 0);
        // Fixed input order keeps the bytes independent of arrival order.
        for u in self.slots.iter().flatten() {
            if u.leaves_done > 0 {
                summary = summary.merge(&u.summary)?;
            }
            done += u.leaves_done;
            total += u.leaves_total;
        }
        Ok(Update { summary, leaves_done: done, leaves_total: total })
    }

    pub fn run(mut self, rx: Receiver<Arrival>, sink: &mut dyn FnMut(Update)) -> Result<()> {
        let n = self.slots.len();
        let mut finished = vec![false; n];
        let mut remaining = n;
        let mut last_emit: Option<Instant> = None;
        let mut window: Option<Instant> = None;
        let reported = |slots: &[Option<Update>]| slots.iter().all(Option::is_some);
        if n > 0 && reported(&self.slots) {
            sink(self.snapshot()?);
            last_emit = Some(Instant::now());
        }
        while remaining > 0 {
            let due = match (window, last_emit) {
                (Some(w), Some(l)) if reported(&self.slots) => Some(w.max(l) + self.interval),
                _ => None,
            };
            let msg = match due {
                Some(d) => rx.recv_deadline(d),
                None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
            };
            match msg {
                Ok(Arrival::Progress(i, u)) => {
                    self.slots[i] = Some(u);
                    window.get_or_insert_with(Instant::now);
                }
                Ok(Arrival::Finished(i, r)) => {
                    r?;
                    if !std::mem::replace(&mut finished[i], true) {
                        remaining -= 1;
                    }
                }
                Ok(Arrival::Cancel) => return Err(EngineError::Cancelled),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(EngineError::Protocol("inputs vanished before finishing".into()))
                }
            }
            if remaining == 0 || !reported(&self.slots) {
                continue;
            }
            let now = Instant::now();
            match (last_emit, window) {
                (None, _) => {
                    sink(self.snapshot()?);
                    last_emit = Some(now);
                    window = None;
                }
                (Some(l), Some(w)) if now >= w.max(l) + self.interval => {
                    let u = self.snapshot()?;
                    // A complete state is reported once, as the final update.
                    if u.leaves_done < u.leaves_total {
                        sink(u);
                    }
                    last_emit = Some(now);
                    window = None;
                }
                _ => {}
            }
        }
        sink(self.snapshot()?);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vizketch_core::SketchKind;

    fn counts(req: &SketchRequest, values: &[i64]) -> Summary {
        let t = vizketch_core::Table::new(vec![vizketch_core::Column::new(
            "v",
            vizketch_core::ColumnData::Int(values.to_vec()),
            None,
        )])
        .unwrap();
        vizketch_core::summarize(&t, req, 0).unwrap()
    }

    #[test]
    fn batches_and_finishes() {
        let mut req = SketchRequest::new(SketchKind::HistogramExact, &["v"]);
        req.x = Some(vizketch_core::sketch::BucketSpec::Numeric { min: 0.0, max: 4.0, count: 4 });
        let (tx, rx) = crossbeam_channel::unbounded();
        let g = Gather {
            request: &req,
            slots: vec![None, None],
            interval: Duration::from_millis(30),
        };
        let r2 = req.clone();
        let feeder = std::thread::spawn(move || {
            for i in 0..2 {
                tx.send(Arrival::Progress(i, Update { summary: identity(&r2).unwrap(), leaves_done: 0, leaves_total: 2 })).unwrap();
            }
            tx.send(Arrival::Progress(0, Update { summary: counts(&r2, &[0, 1]), leaves_done: 2, leaves_total: 2 })).unwrap();
            tx.send(Arrival::Finished(0, Ok(()))).unwrap();
            std::thread::sleep(Duration::from_millis(100));
            tx.send(Arrival::Progress(1, Update { summary: counts(&r2, &[3]), leaves_done: 2, leaves_total: 2 })).unwrap();
            tx.send(Arrival::Finished(1, Ok(()))).unwrap();
        });
        let mut seen = Vec::new();
        let mut times = Vec::new();
        g.run(rx, &mut |u| {
            seen.push(u);
            times.push(Instant::now());
        })
        .unwrap();
        feeder.join().unwrap();
        let done: Vec<u64> = seen.iter().map(|u| u.leaves_done).collect();
        assert_eq!(done.first(), Some(&0));
        assert_eq!(done.last(), Some(&4));
        assert!(done.windows(2).all(|w| w[0] <= w[1]));
        assert!(done.contains(&2), "{done:?}");
        for w in times.windows(2).take(times.len().saturating_sub(2)) {
            assert!(w[1] - w[0] >= Duration::from_millis(30));
        }
        assert_eq!(seen.last().unwrap().summary, counts(&req, &[0, 1, 3]));
    }

    #[test]
    fn cancel_and_errors_stop_the_loop() {
        let req = SketchRequest::new(SketchKind::Moments, &["v"]);
        let (tx, rx) = crossbeam_channel::unbounded();
        tx.send(Arrival::Cancel).unwrap();
        let g = Gather { request: &req, slots: vec![None], interval: Duration::ZERO };
        assert!(matches!(g.run(rx, &mut |_| {}), Err(EngineError::Cancelled)));
        let (tx, rx) = crossbeam_channel::unbounded();
        tx.send(Arrival::Finished(0, Err(EngineError::WorkerLost("w".into())))).unwrap();
        let g = Gather { request: &req, slots: vec![None], interval: Duration::ZERO };
        assert!(matches!(g.run(rx, &mut |_| {}), Err(EngineError::WorkerLost(_))));
    }
}
