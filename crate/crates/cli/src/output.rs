//! Tabular reports rendered as CSV or JSON with identical numeric values.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same double, so every cell round-trips exactly.

use std::io::Write;
use std::path::Path;

use serde::ser::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Float(x) => format!("{x:?}"),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Self::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Self::Int(i64::from(b))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Self::Empty, Into::into)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Int(i) => s.serialize_i64(*i),
            Self::Float(x) => s.serialize_f64(*x),
            Self::Text(t) => s.serialize_str(t),
            Self::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let out = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.columns).map_err(out)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(out)?;
        }
        w.into_inner().map_err(|e| CliError::Output(e.to_string()))
    }

    fn rows_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| {
                            (
                                c.to_string(),
                                serde_json::to_value(cell).unwrap_or(Value::Null),
                            )
                        })
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Output of one command: the main table, scalar results and notes.
#[derive(Debug, Default)]
pub struct Report {
    pub command: &'static str,
    pub table: Table,
    /// Scalar and structured results, added to the JSON object. In CSV mode
    /// they are summarised in the notes.
    pub meta: Map<String, Value>,
    /// Human-readable remarks; stderr in CSV mode, `"notes"` in JSON.
    pub notes: Vec<String>,
    /// Set when the command produced output but must exit unsuccessfully.
    pub failure: Option<CliError>,
}

impl Report {
    pub fn new(command: &'static str, table: Table) -> Self {
        Self {
            command,
            table,
            ..Self::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        self.meta.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let mut obj = Map::new();
        obj.insert("command".into(), Value::String(self.command.into()));
        obj.extend(self.meta.clone());
        obj.insert(
            "columns".into(),
            Value::Array(
                self.table
                    .columns
                    .iter()
                    .map(|c| Value::String(c.to_string()))
                    .collect(),
            ),
        );
        obj.insert("rows".into(), self.table.rows_json());
        obj.insert(
            "notes".into(),
            Value::Array(self.notes.iter().cloned().map(Value::String).collect()),
        );
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj))
            .map_err(|e| CliError::Output(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Writes the report to `path` (stdout when `None`); CSV notes go to stderr.
    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let bytes = match format {
            Format::Csv => {
                for note in &self.notes {
                    eprintln!("note: {note}");
                }
                self.table.to_csv()?
            }
            Format::Json => self.to_json()?,
        };
        write_bytes(path, &bytes)
    }
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
