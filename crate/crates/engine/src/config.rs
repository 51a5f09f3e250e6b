use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Engine settings. Loaded from one JSON file; a few paths and endpoints
/// can be overridden from the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Rows per micropartition, the unit of leaf work.
    pub micropartition_rows: usize,
    /// How long a non-leaf node gathers arrivals before emitting a partial.
    pub batch_interval_ms: u64,
    /// Leaf pool width; 0 means the hardware parallelism.
    pub threads: usize,
    pub fanout: usize,
    /// Worker endpoints (`host:port`); empty means in-process workers.
    pub workers: Vec<String>,
    /// In-process worker count when `workers` is empty.
    pub local_workers: usize,
    pub cache_idle_secs: u64,
    pub cache_bytes: usize,
    /// Summaries larger than this are not cached.
    pub summary_cap_bytes: usize,
    pub data_cache_bytes: usize,
    /// Retries per worker call before reporting the worker lost.
    pub retries: u32,
    pub retry_backoff_ms: u64,
    pub redo_log: Option<PathBuf>,
    pub bind: String,
    /// Executions whose client disappeared are cancelled after this long.
    pub orphan_timeout_secs: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            micropartition_rows: 100_000,
            batch_interval_ms: 100,
            threads: 0,
            fanout: 8,
            workers: Vec::new(),
            local_workers: 1,
            cache_idle_secs: 2 * 60 * 60,
            cache_bytes: 256 << 20,
            summary_cap_bytes: 16 << 20,
            data_cache_bytes: 4 << 30,
            retries: 2,
            retry_backoff_ms: 50,
            redo_log: None,
            bind: "127.0.0.1:7878".into(),
            orphan_timeout_secs: 60,
        }
    }
}

pub const ENV_REDO_LOG: &str = "VIZKETCH_REDO_LOG";
pub const ENV_WORKERS: &str = "VIZKETCH_WORKERS";
pub const ENV_BIND: &str = "VIZKETCH_BIND";

impl EngineConfig {
    pub fn load(path: &Path) -> Result<EngineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::BadRequest(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| EngineError::BadRequest(format!("{}: {e}", path.display())))
    }

    /// Applies `VIZKETCH_REDO_LOG`, `VIZKETCH_WORKERS` (comma separated)
    /// and `VIZKETCH_BIND`.
    pub fn with_env(mut self) -> EngineConfig {
        self.apply_env(|k| std::env::var(k).ok());
        self
    }

    fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(p) = get(ENV_REDO_LOG) {
            self.redo_log = Some(p.into());
        }
        if let Some(w) = get(ENV_WORKERS) {
            self.workers = w.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        if let Some(b) = get(ENV_BIND) {
            self.bind = b;
        }
    }

    pub fn batch_interval(&self) -> Duration {
        Duration::from_millis(self.batch_interval_ms)
    }

    pub fn pool_width(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    pub fn cache_idle(&self) -> Duration {
        Duration::from_secs(self.cache_idle_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: EngineConfig = serde_json::from_str(r#"{"micropartition_rows": 10}"#).unwrap();
        assert_eq!(c.micropartition_rows, 10);
        assert_eq!(c.batch_interval_ms, 100);
        assert_eq!(c.fanout, 8);
    }

    #[test]
    fn environment_overrides() {
        let mut c = EngineConfig::default();
        c.apply_env(|k| match k {
            ENV_WORKERS => Some("a:1, b:2".into()),
            ENV_REDO_LOG => Some("/tmp/x.log".into()),
            _ => None,
        });
        assert_eq!(c.workers, ["a:1", "b:2"]);
        assert_eq!(c.redo_log, Some(PathBuf::from("/tmp/x.log")));
        assert_eq!(c.bind, EngineConfig::default().bind);
    }
}
