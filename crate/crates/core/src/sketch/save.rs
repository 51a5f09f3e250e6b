//! Writes each partition as one shard file of a directory.

use std::path::Path;

use super::request::SketchRequest;
use super::summary::WriteReport;
use crate::error::Result;
use crate::io::{write_csv, write_jsonl, write_schema, FileFormat};
use crate::table::Table;

pub fn shard_name(partition_key: u64, format: FileFormat) -> String {
    format!("part-{partition_key:016x}.{}", format.extension())
}

pub(crate) fn summarize(table: &Table, req: &SketchRequest, partition_key: u64) -> Result<WriteReport> {
    let out = req.output.as_ref().expect("validated request has an output");
    let dir = Path::new(&out.path);
    let mut report = WriteReport::default();
    let attempt = || -> std::result::Result<usize, String> {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        // Every leaf writes the same schema; rename makes the replacement atomic.
        let tmp = dir.join(format!(".schema-{partition_key:016x}.tmp"));
        write_schema(&table.schema(), &tmp).map_err(|e| e.to_string())?;
        std::fs::rename(&tmp, dir.join("schema.json")).map_err(|e| e.to_string())?;
        if table.member_count() == 0 {
            return Ok(0);
        }
        let path = dir.join(shard_name(partition_key, out.format));
        let written = match out.format {
            FileFormat::Csv => write_csv(table, &path),
            FileFormat::Jsonl => write_jsonl(table, &path),
        };
        written.map_err(|e| e.to_string())
    };
    match attempt() {
        Ok(n) => report.rows_written = n as u64,
        Err(e) => report.errors.push(e),
    }
    Ok(report)
}

pub(crate) fn merge(a: &WriteReport, b: &WriteReport) -> WriteReport {
    let mut errors: Vec<String> = a.errors.iter().chain(&b.errors).cloned().collect();
    errors.sort();
    WriteReport {
        rows_written: a.rows_written + b.rows_written,
        errors,
    }
}
