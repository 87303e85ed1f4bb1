use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ictc_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;

/// One line of a decode or sweep result table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub mode: String,
    pub fusion: String,
    pub lambda: f64,
    pub alpha: f64,
    pub cer: Option<f64>,
    pub decode_latency_ms: Option<f64>,
    /// Present for rescoring modes only.
    pub rescore_latency_ms: Option<f64>,
    pub rtf: Option<f64>,
    /// Set when the cell failed; the other measurements are then empty.
    pub error: Option<String>,
}

pub fn write_jsonl<S: Serialize>(path: &Path, items: &[S]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("record serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Serializes `rows` with a header row taken from the field names.
pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a table given as header plus string records.
pub fn write_table(path: &Path, header: &[String], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn is_timing_key(key: &str) -> bool {
    key == "rtf" || key == "wall_ms" || key.ends_with("latency_ms") || key == "machine"
}

/// Drops timing fields from a JSON value, recursively.
pub fn strip_timing(value: Value) -> Value {
    match value {
        Value::Object(map) => Value::Object(
            map.into_iter().filter(|(k, _)| !is_timing_key(k)).map(|(k, v)| (k, strip_timing(v))).collect(),
        ),
        Value::Array(items) => Value::Array(items.into_iter().map(strip_timing).collect()),
        other => other,
    }
}
