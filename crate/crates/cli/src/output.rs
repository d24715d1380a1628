//! Rendering and routing of results.
//!
//! Every subcommand produces either a table (trajectories, section samples)
//! or a document (matrices, reports). Tables default to CSV with a header
//! row and 17 significant digits per value; documents default to JSON with
//! shortest round-trip floats. `--format` re-encodes one shape as the
//! other: a table becomes a `{columns, rows}` document, a document becomes
//! two-column `key,value` CSV over its flattened tree.

use std::io::Write as _;
use std::path::Path;

use pathlift_core::{Error, Matrix64, Result, Tensor64};
use serde_json::{json, Value};

use crate::scene::Format;

pub enum Payload {
    Table {
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
    Document(Value),
}

impl Payload {
    pub fn default_format(&self) -> Format {
        match self {
            Payload::Table { .. } => Format::Csv,
            Payload::Document(_) => Format::Json,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Payload::Table { columns, rows }, Format::Csv) => {
                let mut out = String::new();
                out.push_str(&columns.join(","));
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|v| float_cell(*v)).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            (Payload::Table { columns, rows }, Format::Json) => {
                let doc = json!({ "columns": columns, "rows": rows });
                render_json(&doc)
            }
            (Payload::Document(doc), Format::Json) => render_json(doc),
            (Payload::Document(doc), Format::Csv) => {
                let mut lines = vec!["key,value".to_string()];
                flatten(doc, String::new(), &mut lines);
                let mut out = lines.join("\n");
                out.push('\n');
                out
            }
        }
    }
}

fn render_json(doc: &Value) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("tree has no non-string keys");
    out.push('\n');
    out
}

/// 17 significant digits: enough to reproduce any `f64` exactly.
fn float_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn flatten(value: &Value, prefix: String, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(v, key, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, format!("{prefix}[{i}]"), out);
            }
        }
        Value::String(s) => out.push(format!("{prefix},{}", csv_quote(s))),
        other => out.push(format!("{prefix},{other}")),
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn json_matrix(m: &Matrix64) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| Value::from((0..m.cols()).map(|j| m[(i, j)]).collect::<Vec<f64>>()))
        .collect();
    Value::from(rows)
}

/// Tensor components as the nested-array literal form scene files use.
pub fn json_tensor(t: &Tensor64) -> Value {
    let (p, q) = t.rank();
    nest(t.as_slice(), p + q, t.dim())
}

fn nest(data: &[f64], rank: usize, dim: usize) -> Value {
    if rank == 0 {
        return Value::from(data[0]);
    }
    let stride = data.len() / dim;
    Value::from(
        (0..dim)
            .map(|i| nest(&data[i * stride..(i + 1) * stride], rank - 1, dim))
            .collect::<Vec<Value>>(),
    )
}

/// Writes to the file if a destination is set, otherwise to stdout.
pub fn deliver(text: &str, destination: Option<&Path>) -> Result<()> {
    match destination {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Ok(()) => Ok(()),
                // A closed pipe downstream is the reader's choice.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(Error::InvalidInput(format!("cannot write to stdout: {e}"))),
            }
        }
    }
}
