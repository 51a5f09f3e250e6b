//! Append-only JSON-lines log of everything the root has acknowledged.
//! Each append is flushed to disk before the operation becomes visible.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use vizketch_core::SketchRequest;

use crate::error::{EngineError, Result};
use crate::lineage::DatasetRef;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogOp {
    Dataset { dataset: DatasetRef },
    Query { dataset: String, request: Box<SketchRequest> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedoLogEntry {
    pub seq: u64,
    pub op: LogOp,
    pub seed: u64,
    /// Milliseconds since the epoch.
    pub timestamp: u64,
}

/// Points where tests can make an append fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Failpoint {
    #[default]
    None,
    BeforeAppend,
    /// The entry is durable but the caller never learns it.
    AfterAppend,
}

struct Inner {
    file: Option<File>,
    next_seq: u64,
    failpoint: Failpoint,
}

pub struct RedoLog {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

/// What reading a log back found.
#[derive(Debug, Default)]
pub struct Recovered {
    pub entries: Vec<RedoLogEntry>,
    /// Line number (1-based) of the first unreadable entry, if any.
    pub truncated_at: Option<usize>,
}

impl RedoLog {
    /// A log that keeps nothing; sequence numbers still advance.
    pub fn in_memory() -> RedoLog {
        RedoLog { path: None, inner: Mutex::new(Inner { file: None, next_seq: 1, failpoint: Failpoint::None }) }
    }

    /// Opens `path`, reading back the valid prefix. A corrupt tail is cut
    /// off so later appends follow the last good entry.
    pub fn open(path: &Path) -> Result<(RedoLog, Recovered)> {
        let recovered = read(path)?;
        if recovered.truncated_at.is_some() {
            let mut text = String::new();
            for e in &recovered.entries {
                text.push_str(&serde_json::to_string(e).expect("log entries serialize"));
                text.push('\n');
            }
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, text).map_err(|e| EngineError::Log(e.to_string()))?;
            std::fs::rename(&tmp, path).map_err(|e| EngineError::Log(e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| EngineError::Log(format!("{}: {e}", path.display())))?;
        let next_seq = recovered.entries.last().map_or(1, |e| e.seq + 1);
        let log = RedoLog {
            path: Some(path.to_owned()),
            inner: Mutex::new(Inner { file: Some(file), next_seq, failpoint: Failpoint::None }),
        };
        Ok((log, recovered))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn set_failpoint(&self, fp: Failpoint) {
        self.inner.lock().failpoint = fp;
    }

    /// Reserves the next sequence number without writing anything.
    pub fn peek_seq(&self) -> u64 {
        self.inner.lock().next_seq
    }

    /// Durably appends `op`; returns the entry once it is on disk.
    pub fn append(&self, op: LogOp, seed: u64) -> Result<RedoLogEntry> {
        let mut inner = self.inner.lock();
        if inner.failpoint == Failpoint::BeforeAppend {
            return Err(EngineError::Log("injected failure before append".into()));
        }
        let entry = RedoLogEntry {
            seq: inner.next_seq,
            op,
            seed,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
        };
        if let Some(file) = inner.file.as_mut() {
            let mut line = serde_json::to_string(&entry).expect("log entries serialize");
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|e| EngineError::Log(e.to_string()))?;
            file.sync_data().map_err(|e| EngineError::Log(e.to_string()))?;
        }
        inner.next_seq += 1;
        if inner.failpoint == Failpoint::AfterAppend {
            return Err(EngineError::Log("injected failure after append".into()));
        }
        Ok(entry)
    }
}

pub fn read(path: &Path) -> Result<Recovered> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Recovered::default()),
        Err(e) => return Err(EngineError::Log(format!("{}: {e}", path.display()))),
    };
    let mut out = Recovered::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let parsed = line
            .ok()
            .and_then(|l| serde_json::from_str::<RedoLogEntry>(&l).ok())
            .filter(|e| out.entries.last().is_none_or(|last| e.seq > last.seq));
        match parsed {
            Some(e) => out.entries.push(e),
            None => {
                out.truncated_at = Some(i + 1);
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineage::{LineageOp, Source};

    fn load(id: &str) -> LogOp {
        LogOp::Dataset {
            dataset: DatasetRef { id: id.into(), op: LineageOp::Load { source: Source::new("x/*.csv") }, seed: 1 },
        }
    }

    #[test]
    fn append_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("redo.log");
        let (log, rec) = RedoLog::open(&path).unwrap();
        assert!(rec.entries.is_empty());
        log.append(load("d1"), 1).unwrap();
        log.append(load("d2"), 2).unwrap();
        drop(log);
        let (log, rec) = RedoLog::open(&path).unwrap();
        assert_eq!(rec.entries.iter().map(|e| e.seq).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(log.append(load("d3"), 3).unwrap().seq, 3);
    }

    #[test]
    fn torn_tail_is_cut() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("redo.log");
        let (log, _) = RedoLog::open(&path).unwrap();
        log.append(load("d1"), 1).unwrap();
        log.append(load("d2"), 2).unwrap();
        drop(log);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() - 10]).unwrap();
        let (log, rec) = RedoLog::open(&path).unwrap();
        assert_eq!(rec.entries.len(), 1);
        assert_eq!(rec.truncated_at, Some(2));
        assert_eq!(log.append(load("d2"), 2).unwrap().seq, 2);
        assert_eq!(read(&path).unwrap().entries.len(), 2);
    }

    #[test]
    fn failpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("redo.log");
        let (log, _) = RedoLog::open(&path).unwrap();
        log.set_failpoint(Failpoint::BeforeAppend);
        assert!(log.append(load("d1"), 1).is_err());
        assert!(read(&path).unwrap().entries.is_empty());
        log.set_failpoint(Failpoint::AfterAppend);
        assert!(log.append(load("d1"), 1).is_err());
        assert_eq!(read(&path).unwrap().entries.len(), 1);
    }
}
