//! CSV and JSON emission with a metadata preamble.
//!
//! Every CSV starts with `# key=value` comment lines, then an RFC 4180 body.
//! Numbers are written with Rust's shortest round-trip formatting, so values
//! re-parse bit for bit and never depend on locale.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const TOOL: &str = "introspect";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest string that parses back to exactly `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Self {
            entries: Vec::new(),
        };
        m.push("tool", TOOL);
        m.push("version", VERSION);
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        Value::Object(map)
    }
}

/// A rectangular result ready to be written as CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| CliError::io(path, e))?,
    ))
}

pub fn write_csv(path: &Path, meta: &Metadata, table: &Table) -> Result<()> {
    let mut out = create(path)?;
    for (k, v) in meta.entries() {
        writeln!(out, "# {k}={v}").map_err(|e| CliError::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// One JSON document holding the metadata and each named table as an
/// array of row objects. Cells stay strings so values match the CSV exactly.
pub fn write_json(path: &Path, meta: &Metadata, tables: &[(&str, &Table)]) -> Result<()> {
    let mut doc = Map::new();
    doc.insert("metadata".into(), meta.to_json());
    for (name, table) in tables {
        let rows = table
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    table
                        .header
                        .iter()
                        .zip(row)
                        .map(|(h, c)| (h.clone(), Value::String(c.clone())))
                        .collect(),
                )
            })
            .collect();
        doc.insert((*name).to_string(), Value::Array(rows));
    }
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(doc))?;
    writeln!(out).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`] back into metadata and table.
pub fn read_csv(path: &Path) -> Result<(Metadata, Table)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut meta = Metadata {
        entries: Vec::new(),
    };
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
                meta.entries.push((k.to_string(), v.to_string()));
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((meta, Table { header, rows }))
}

/// Files written by a command, in the order they were written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}
