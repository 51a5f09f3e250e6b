use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vizketch_core::io::{CsvOptions, FileFormat};

/// Where a dataset's shards come from. Every worker expands `glob` on its
/// own filesystem. A `{worker}` placeholder is replaced by the worker index;
/// without one, matches are dealt round-robin across workers so a shared
/// filesystem does not load the same file twice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub glob: String,
    /// Inferred from each file's extension when absent.
    #[serde(default)]
    pub format: Option<FileFormat>,
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default = "comma")]
    pub delimiter: char,
    #[serde(default = "yes")]
    pub header: bool,
    /// Shard count across all workers, pinned at registration so a file that
    /// disappears later is reported instead of silently dropped.
    #[serde(default)]
    pub shards: Option<usize>,
}

fn comma() -> char {
    ','
}

fn yes() -> bool {
    true
}

impl Source {
    pub fn new(glob: impl Into<String>) -> Source {
        Source { glob: glob.into(), format: None, schema: None, delimiter: ',', header: true, shards: None }
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions { delimiter: self.delimiter as u8, has_header: self.header }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LineageOp {
    Load { source: Source },
    Filter { parent: String, predicate: String },
    MapColumn { parent: String, expr: String, name: String },
}

impl LineageOp {
    pub fn parent(&self) -> Option<&str> {
        match self {
            LineageOp::Load { .. } => None,
            LineageOp::Filter { parent, .. } | LineageOp::MapColumn { parent, .. } => Some(parent),
        }
    }
}

/// A handle to a dataset that may or may not be materialized anywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub id: String,
    pub op: LineageOp,
    pub seed: u64,
}

/// The chain of datasets from a `Load` down to the one being used, root first.
pub type Lineage = Vec<DatasetRef>;
