//! Result tables with a metadata block sufficient to re-run the
//! experiment bit-identically.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One table cell. Floats render through Rust's shortest round-trip
/// formatting: dot decimal separator, no locale dependence.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    /// Rendered empty in CSV, null in JSON.
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub paper_scale: bool,
    pub wall_clock_seconds: f64,
    /// Echo of the effective configuration; rerunning with this block and
    /// the same seed reproduces every row bit for bit.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(
        command: &str,
        columns: Vec<&'static str>,
        config: serde_json::Value,
        seed: u64,
        paper_scale: bool,
    ) -> Self {
        Self {
            metadata: Metadata {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION"),
                seed,
                paper_scale,
                wall_clock_seconds: 0.0,
                config,
            },
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("table serialization");
                s.push('\n');
                s
            }
            OutputFormat::Csv => {
                let mut out = String::new();
                out.push_str("# ");
                out.push_str(&serde_json::to_string(&self.metadata).expect("metadata"));
                out.push('\n');
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::to_csv).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
        }
    }
}
