//! Distributed execution of vizketches: a tree of aggregation nodes over
//! workers that hold sharded tables, with progressive partial results,
//! cancellation, caches, and a redo log for rebuilding lost state.

pub mod cache;
pub mod config;
pub mod error;
pub mod lineage;
pub mod local;
pub mod node;
pub mod partition;
pub mod pool;
pub mod prepare;
pub mod redo;
pub mod remote;
pub mod root;
pub mod tree;
pub mod wire;

pub use config::EngineConfig;
pub use error::{EngineError, Result};
pub use lineage::{DatasetRef, Lineage, LineageOp, Source};
pub use local::LocalWorker;
pub use node::{ExecutionId, Job, Node, Update};
pub use root::{Event, Execution, LocalCluster, PartialResult, Root};
