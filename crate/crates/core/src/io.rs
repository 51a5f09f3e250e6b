//! CSV and JSON-lines ingestion and output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::column::ColumnBuilder;
use crate::error::{CoreError, Result};
use crate::table::{ColumnDesc, Schema, Table};
use crate::value::{format_timestamp, parse_timestamp, Value, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => FileFormat::Jsonl,
            _ => FileFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Csv => "csv",
            FileFormat::Jsonl => "jsonl",
        }
    }
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let file = File::open(path).map_err(|e| CoreError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CoreError::Encoding(format!("{}: {e}", path.display())))
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(schema).expect("schema serializes");
    std::fs::write(path, text).map_err(|e| CoreError::io(path, e))
}

/// Loads a file by extension: `.jsonl`/`.json`/`.ndjson` as JSON lines,
/// anything else as CSV.
pub fn load_file(path: &Path, schema: Option<&Schema>, options: CsvOptions) -> Result<Table> {
    match FileFormat::from_path(path) {
        FileFormat::Csv => load_csv(path, schema, options),
        FileFormat::Jsonl => load_jsonl(path, schema),
    }
}

/// Streams the kinds a column could have; the first kind in
/// Int, Float, Timestamp, Str order that accepts every non-empty cell wins.
#[derive(Clone, Copy)]
struct KindGuess {
    int: bool,
    float: bool,
    timestamp: bool,
}

impl KindGuess {
    fn new() -> Self {
        KindGuess {
            int: true,
            float: true,
            timestamp: true,
        }
    }

    fn observe(&mut self, cell: &str) {
        if cell.is_empty() {
            return;
        }
        if self.int && cell.parse::<i64>().is_err() {
            self.int = false;
        }
        if !self.int && self.float && cell.parse::<f64>().is_err() {
            self.float = false;
        }
        if !self.int && !self.float && self.timestamp && parse_timestamp(cell).is_none() {
            self.timestamp = false;
        }
    }

    fn kind(self, seen: bool) -> ValueKind {
        match (seen, self.int, self.float, self.timestamp) {
            (false, ..) => ValueKind::Str,
            (_, true, ..) => ValueKind::Int,
            (_, _, true, _) => ValueKind::Float,
            (_, _, _, true) => ValueKind::Timestamp,
            _ => ValueKind::Str,
        }
    }
}

fn csv_reader(path: &Path, options: CsvOptions) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CoreError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CoreError {
    let line = e.position().map_or(0, |p| p.line());
    CoreError::Parse {
        path: path.display().to_string(),
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

pub fn load_csv(path: &Path, schema: Option<&Schema>, options: CsvOptions) -> Result<Table> {
    let pstr = path.display().to_string();
    let mut reader = csv_reader(path, options)?;
    let mut records = reader.records();
    let header: Option<Vec<String>> = if options.has_header {
        match records.next() {
            Some(r) => Some(r.map_err(|e| csv_error(path, e))?.iter().map(str::to_owned).collect()),
            None => Some(Vec::new()),
        }
    } else {
        None
    };

    let resolved: Schema = match schema {
        Some(s) => s.clone(),
        None => {
            let mut guesses: Vec<KindGuess> = Vec::new();
            let mut seen: Vec<bool> = Vec::new();
            let mut width = header.as_ref().map(Vec::len);
            for rec in records {
                let rec = rec.map_err(|e| csv_error(path, e))?;
                let w = *width.get_or_insert(rec.len());
                if rec.len() != w {
                    return Err(CoreError::Arity {
                        path: pstr,
                        line: rec.position().map_or(0, |p| p.line()),
                        expected: w,
                        found: rec.len(),
                    });
                }
                if guesses.is_empty() {
                    guesses = vec![KindGuess::new(); w];
                    seen = vec![false; w];
                }
                for (i, cell) in rec.iter().enumerate() {
                    guesses[i].observe(cell);
                    seen[i] |= !cell.is_empty();
                }
            }
            let width = width.unwrap_or(0);
            let names: Vec<String> = match &header {
                Some(h) => h.clone(),
                None => (0..width).map(|i| format!("c{i}")).collect(),
            };
            Schema(
                names
                    .into_iter()
                    .enumerate()
                    .map(|(i, name)| ColumnDesc {
                        name,
                        kind: guesses
                            .get(i)
                            .map_or(ValueKind::Str, |g| g.kind(seen[i])),
                    })
                    .collect(),
            )
        }
    };
    if let Some(h) = &header {
        if schema.is_some() && h.len() != resolved.0.len() {
            return Err(CoreError::Arity {
                path: pstr,
                line: 1,
                expected: resolved.0.len(),
                found: h.len(),
            });
        }
    }

    let mut reader = csv_reader(path, options)?;
    let mut records = reader.records();
    if options.has_header {
        records.next();
    }
    let mut builders: Vec<ColumnBuilder> = resolved
        .0
        .iter()
        .map(|c| ColumnBuilder::new(&c.name, c.kind))
        .collect();
    let mut rows = 0;
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != builders.len() {
            return Err(CoreError::Arity {
                path: pstr,
                line,
                expected: builders.len(),
                found: rec.len(),
            });
        }
        for (b, cell) in builders.iter_mut().zip(rec.iter()) {
            push_text(b, cell).map_err(|message| CoreError::Parse {
                path: pstr.clone(),
                line,
                column: b.name().to_owned(),
                message,
            })?;
        }
        rows += 1;
    }
    let columns: Vec<_> = builders.into_iter().map(|b| Arc::new(b.finish())).collect();
    Table::with_rows(columns, rows)
}

fn push_text(b: &mut ColumnBuilder, cell: &str) -> std::result::Result<(), String> {
    if cell.is_empty() {
        b.push_missing();
        return Ok(());
    }
    match b.kind() {
        ValueKind::Int => b.push_int(cell.parse().map_err(|_| format!("`{cell}` is not an integer"))?),
        ValueKind::Float => b.push_float(cell.parse().map_err(|_| format!("`{cell}` is not a number"))?),
        ValueKind::Timestamp => {
            b.push_int(parse_timestamp(cell).ok_or_else(|| format!("`{cell}` is not a timestamp"))?)
        }
        ValueKind::Str => b.push_str(cell),
    }
    Ok(())
}

pub fn load_jsonl(path: &Path, schema: Option<&Schema>) -> Result<Table> {
    let pstr = path.display().to_string();
    let file = File::open(path).map_err(|e| CoreError::io(path, e))?;
    let mut objects = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| CoreError::Parse {
                path: pstr.clone(),
                line: i as u64 + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
        objects.push((i as u64 + 1, obj));
    }
    let resolved = match schema {
        Some(s) => s.clone(),
        None => {
            let mut names: Vec<String> = Vec::new();
            let mut guesses: Vec<(KindGuess, bool)> = Vec::new();
            for (_, obj) in &objects {
                for (k, v) in obj {
                    let idx = match names.iter().position(|n| n == k) {
                        Some(i) => i,
                        None => {
                            names.push(k.clone());
                            guesses.push((KindGuess::new(), false));
                            names.len() - 1
                        }
                    };
                    let text = json_text(v);
                    guesses[idx].0.observe(&text);
                    guesses[idx].1 |= !text.is_empty();
                    if v.is_string() {
                        guesses[idx].0.int = false;
                        guesses[idx].0.float = false;
                    }
                }
            }
            Schema(
                names
                    .into_iter()
                    .zip(guesses)
                    .map(|(name, (g, seen))| ColumnDesc {
                        name,
                        kind: g.kind(seen),
                    })
                    .collect(),
            )
        }
    };
    let mut builders: Vec<ColumnBuilder> =
        resolved.0.iter().map(|c| ColumnBuilder::new(&c.name, c.kind)).collect();
    for (line, obj) in &objects {
        for b in builders.iter_mut() {
            let text = obj.get(b.name()).map(json_text).unwrap_or_default();
            let name = b.name().to_owned();
            push_text(b, &text).map_err(|message| CoreError::Parse {
                path: pstr.clone(),
                line: *line,
                column: name,
                message,
            })?;
        }
    }
    let columns: Vec<_> = builders.into_iter().map(|b| Arc::new(b.finish())).collect();
    let rows = columns.first().map_or(objects.len(), |c| c.len());
    Table::with_rows(columns, rows)
}

fn json_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn cell_text(table: &Table, col: usize, row: usize) -> String {
    let c = &table.columns()[col];
    match c.value(row) {
        Value::Missing => String::new(),
        Value::Int(v) => v.to_string(),
        Value::Float(v) => v.to_string(),
        Value::Timestamp(ms) => format_timestamp(ms),
        Value::Str(code) => c.string(code).to_owned(),
    }
}

/// Writes the member rows of `table` as CSV with a header line.
pub fn write_csv(table: &Table, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| CoreError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| CoreError::Encoding(format!("{}: {e}", path.display()));
    w.write_record(table.columns().iter().map(|c| c.name())).map_err(io_err)?;
    let mut n = 0;
    for row in table.members().iter() {
        w.write_record((0..table.columns().len()).map(|c| cell_text(table, c, row)))
            .map_err(io_err)?;
        n += 1;
    }
    w.flush().map_err(|e| CoreError::io(path, e))?;
    Ok(n)
}

/// Writes the member rows of `table` as JSON objects, one per line.
pub fn write_jsonl(table: &Table, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| CoreError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut n = 0;
    for row in table.members().iter() {
        let mut obj = serde_json::Map::new();
        for c in table.columns() {
            let v = match c.value(row) {
                Value::Missing => serde_json::Value::Null,
                Value::Int(v) => v.into(),
                Value::Float(v) => v.into(),
                Value::Timestamp(ms) => format_timestamp(ms).into(),
                Value::Str(code) => c.string(code).into(),
            };
            obj.insert(c.name().to_owned(), v);
        }
        serde_json::to_writer(&mut w, &obj).map_err(|e| CoreError::Encoding(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| CoreError::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| CoreError::io(path, e))?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Datum;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn minimal_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "k,v\na,1\nb,2\n");
        let t = load_csv(&p, None, CsvOptions::default()).unwrap();
        assert_eq!(t.member_count(), 2);
        assert_eq!(t.schema().kind_of("k").unwrap(), ValueKind::Str);
        assert_eq!(t.schema().kind_of("v").unwrap(), ValueKind::Int);
    }

    #[test]
    fn header_only_is_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "k,v\n");
        let t = load_csv(&p, None, CsvOptions::default()).unwrap();
        assert_eq!(t.member_count(), 0);
        assert_eq!(t.schema().names().collect::<Vec<_>>(), vec!["k", "v"]);
    }

    #[test]
    fn empty_cell_is_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "k,v\nx,\ny,3\n");
        let t = load_csv(&p, None, CsvOptions::default()).unwrap();
        assert_eq!(t.rows_as_data()[0], vec![Datum::Str("x".into()), Datum::Missing]);
        assert_eq!(t.schema().kind_of("v").unwrap(), ValueKind::Int);
    }

    #[test]
    fn inference_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.csv",
            "i,f,t,s\n1,1,2020-01-01,x\n2,2.5,2020-01-02T03:04:05Z,2020-01-01\n",
        );
        let s = load_csv(&p, None, CsvOptions::default()).unwrap().schema();
        let kinds: Vec<_> = s.0.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [ValueKind::Int, ValueKind::Float, ValueKind::Timestamp, ValueKind::Str]);
    }

    #[test]
    fn arity_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "k,v\na,1\nb,2,3\n");
        match load_csv(&p, None, CsvOptions::default()) {
            Err(CoreError::Arity { line, expected, found, .. }) => {
                assert_eq!((line, expected, found), (3, 2, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violation_names_column_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "k,v\na,1\nb,zz\n");
        let schema = Schema(vec![
            ColumnDesc { name: "k".into(), kind: ValueKind::Str },
            ColumnDesc { name: "v".into(), kind: ValueKind::Int },
        ]);
        match load_csv(&p, Some(&schema), CsvOptions::default()) {
            Err(CoreError::Parse { line, column, .. }) => assert_eq!((line, column.as_str()), (3, "v")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_delimiter_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.tsv", "1\t2.5\n3\t4\n");
        let opts = CsvOptions { delimiter: b'\t', has_header: false };
        let t = load_csv(&p, None, opts).unwrap();
        assert_eq!(t.schema().names().collect::<Vec<_>>(), vec!["c0", "c1"]);
        assert_eq!(t.schema().kind_of("c1").unwrap(), ValueKind::Float);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.jsonl",
            "{\"a\":1,\"b\":\"x\",\"t\":\"2020-01-01T00:00:00Z\"}\n{\"a\":null,\"b\":\"y\",\"t\":null,\"c\":2.5}\n",
        );
        let t = load_jsonl(&p, None).unwrap();
        assert_eq!(t.member_count(), 2);
        assert_eq!(t.schema().kind_of("t").unwrap(), ValueKind::Timestamp);
        let out = dir.path().join("out.jsonl");
        write_jsonl(&t, &out).unwrap();
        let back = load_jsonl(&out, Some(&t.schema())).unwrap();
        assert_eq!(back.rows_as_data(), t.rows_as_data());
    }
}
