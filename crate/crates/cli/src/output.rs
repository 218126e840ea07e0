use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Echoed into every row and every JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub truncation: usize,
    pub newton_tol: f64,
    pub zero_tol: f64,
    pub tail_tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    None,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::None => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // 17 significant digits round-trip; keep the same text as the CSV.
            Cell::F(x) if x.is_finite() => Value::from(fmt_f64(*x).parse::<f64>().unwrap_or(*x)),
            Cell::F(x) => Value::String(fmt_f64(*x)),
            Cell::I(i) => Value::from(*i),
            Cell::S(s) => Value::String(s.clone()),
            Cell::None => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::None, Into::into)
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra JSON-only payload (full reports).
    pub extra: Option<Value>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new(), extra: None }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

const CONFIG_COLUMNS: [&str; 5] = ["N", "newton_tol", "zero_tol", "tail_tol", "seed"];

fn config_cells(cfg: &RunConfig) -> Vec<Cell> {
    vec![
        cfg.truncation.into(),
        cfg.newton_tol.into(),
        cfg.zero_tol.into(),
        cfg.tail_tol.into(),
        Cell::I(cfg.seed as i64),
    ]
}

pub fn render(table: &Table, cfg: &RunConfig) -> Result<Vec<u8>> {
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(table.header.iter().chain(CONFIG_COLUMNS.iter()))?;
            let echo: Vec<String> = config_cells(cfg).iter().map(Cell::text).collect();
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::text).chain(echo.iter().cloned()))?;
            }
            Ok(w.into_inner().context("flushing csv")?)
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (k, v) in table.header.iter().zip(row) {
                        m.insert((*k).to_string(), v.json());
                    }
                    for (k, v) in CONFIG_COLUMNS.iter().zip(config_cells(cfg)) {
                        m.insert((*k).to_string(), v.json());
                    }
                    Value::Object(m)
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("config".into(), serde_json::to_value(cfg)?);
            doc.insert("rows".into(), Value::Array(rows));
            if let Some(extra) = &table.extra {
                doc.insert("report".into(), extra.clone());
            }
            let mut out = serde_json::to_vec_pretty(&Value::Object(doc))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(table: &Table, cfg: &RunConfig) -> Result<()> {
    let bytes = render(table, cfg)?;
    match &cfg.output_path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
