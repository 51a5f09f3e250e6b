//! Aggregation nodes and tree planning.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::lineage::Lineage;
use crate::node::{Arrival, Description, ExecutionId, Gather, Job, Node, Update};
use crate::partition::Micropartition;

/// Merges the updates of its children, batching emissions.
pub struct Aggregator {
    children: Vec<Arc<dyn Node>>,
    interval: Duration,
}

impl Aggregator {
    pub fn new(children: Vec<Arc<dyn Node>>, interval: Duration) -> Aggregator {
        Aggregator { children, interval }
    }
}

impl Node for Aggregator {
    fn execute(&self, job: &Job, sink: &mut dyn FnMut(Update)) -> Result<()> {
        let (tx, rx) = crossbeam_channel::unbounded();
        let gather = Gather {
            request: &job.request,
            slots: vec![None; self.children.len()],
            interval: self.interval,
        };
        std::thread::scope(|scope| {
            for (i, child) in self.children.iter().enumerate() {
                let tx = tx.clone();
                scope.spawn(move || {
                    let r = child.execute(job, &mut |u| {
                        let _ = tx.send(Arrival::Progress(i, u));
                    });
                    let _ = tx.send(Arrival::Finished(i, r));
                });
            }
            drop(tx);
            let result = gather.run(rx, sink);
            if result.is_err() {
                // Stop siblings of a failed child; the scope waits for them.
                for child in &self.children {
                    child.cancel(job.execution);
                }
            }
            result
        })
    }

    fn cancel(&self, execution: ExecutionId) {
        for child in &self.children {
            child.cancel(execution);
        }
    }

    fn describe(&self, lineage: &Lineage, materialize: bool) -> Result<Description> {
        let mut out = Description::default();
        for child in &self.children {
            let d = child.describe(lineage, materialize)?;
            out.shards += d.shards;
            match (&out.schema, d.schema) {
                (None, s) => out.schema = s,
                (Some(a), Some(b)) if *a != b => {
                    return Err(EngineError::BadRequest(
                        "shards disagree on the schema; supply a schema file".into(),
                    ))
                }
                _ => {}
            }
            out.micropartitions.extend(d.micropartitions);
        }
        Ok(out)
    }

    fn reset(&self) -> Result<()> {
        for child in &self.children {
            child.reset()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafAssignment {
    pub worker: usize,
    pub micropartitions: Vec<Micropartition>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    pub root: String,
    /// Aggregation layers from the root down; the first one is `[root]`.
    /// Empty when a single worker hangs directly off the root.
    pub layers: Vec<Vec<String>>,
    /// `(parent, children)` for every aggregation node.
    pub edges: Vec<(String, Vec<String>)>,
    pub leaves: Vec<LeafAssignment>,
    pub fanout: usize,
}

pub fn worker_name(i: usize) -> String {
    format!("worker-{i}")
}

/// Lays `workers` leaves under aggregation layers of at most `fanout`
/// children each.
pub fn plan(workers: usize, fanout: usize) -> Result<TreeTopology> {
    if workers == 0 {
        return Err(EngineError::BadRequest("need at least one worker".into()));
    }
    let fanout = fanout.max(2);
    let root = "root".to_string();
    let mut current: Vec<String> = (0..workers).map(worker_name).collect();
    let mut layers = Vec::new();
    let mut edges = Vec::new();
    if workers == 1 {
        edges.push((root.clone(), current.clone()));
    }
    let mut depth = 0;
    while current.len() > 1 {
        depth += 1;
        let groups: Vec<Vec<String>> = current.chunks(fanout).map(<[String]>::to_vec).collect();
        let names: Vec<String> = if groups.len() == 1 {
            vec![root.clone()]
        } else {
            (0..groups.len()).map(|i| format!("agg-{depth}-{i}")).collect()
        };
        for (name, group) in names.iter().zip(groups) {
            edges.push((name.clone(), group));
        }
        layers.push(names.clone());
        current = names;
    }
    layers.reverse();
    Ok(TreeTopology {
        root,
        layers,
        edges,
        leaves: (0..workers).map(|w| LeafAssignment { worker: w, micropartitions: Vec::new() }).collect(),
        fanout,
    })
}

impl TreeTopology {
    pub fn assign(&mut self, parts: Vec<Micropartition>) {
        for leaf in &mut self.leaves {
            leaf.micropartitions.clear();
        }
        for p in parts {
            if let Some(leaf) = self.leaves.get_mut(p.worker) {
                leaf.micropartitions.push(p);
            }
        }
    }

    /// Instantiates the tree over `workers` (indexed like the leaves).
    pub fn build(&self, workers: &[Arc<dyn Node>], interval: Duration) -> Arc<dyn Node> {
        fn node(t: &TreeTopology, name: &str, workers: &[Arc<dyn Node>], interval: Duration) -> Arc<dyn Node> {
            if let Some(i) = name.strip_prefix("worker-").and_then(|i| i.parse::<usize>().ok()) {
                return workers[i].clone();
            }
            let children = &t.edges.iter().find(|(p, _)| p == name).expect("every aggregator has edges").1;
            if children.len() == 1 && t.layers.is_empty() {
                return node(t, &children[0], workers, interval);
            }
            Arc::new(Aggregator::new(children.iter().map(|c| node(t, c, workers, interval)).collect(), interval))
        }
        node(self, &self.root, workers, interval)
    }
}
