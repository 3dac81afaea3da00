//! Report writers. CSV reports start with `# ` comment lines holding the
//! command, the normalized config and a one-line JSON summary; JSON reports
//! carry the same pieces as fields.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(v) => *v,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub summary: Value,
    pub table: Table,
    /// Whether the JSON form carries the table; key-value tables duplicate
    /// the summary and are left out.
    pub table_in_json: bool,
}

/// Scientific notation with 14 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        format!("{v:.13e}")
    } else {
        format!("{v}")
    }
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn render(report: &Report, cfg: &RunConfig, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => render_csv(report, cfg),
        Format::Json => render_json(report, cfg),
    }
}

fn render_csv(report: &Report, cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# command: {}", report.command)?;
    for line in cfg.to_toml().lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# summary: {}", serde_json::to_string(&report.summary).expect("summary serializes"))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&report.table.columns)?;
        for row in &report.table.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => fmt_num(*v),
                Cell::Text(s) => s.clone(),
            }))?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn render_json(report: &Report, cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let config = serde_json::to_value(&cfg.normalized).expect("config serializes");
    let mut doc = json!({
        "command": report.command,
        "config": config,
        "summary": report.summary,
    });
    if report.table_in_json {
        let rows: Vec<Value> = report
            .table
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Num(v) => json_num(*v),
                            Cell::Text(s) => json!(s),
                        })
                        .collect(),
                )
            })
            .collect();
        doc["table"] = json!({ "columns": report.table.columns, "rows": rows });
    }
    let mut out = serde_json::to_vec_pretty(&doc).expect("report serializes");
    out.push(b'\n');
    Ok(out)
}
