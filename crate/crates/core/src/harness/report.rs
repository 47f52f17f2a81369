//! Experiment results and their CSV/JSON serialization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentId, Format};
use crate::error::{Error, Result};
use crate::numerics::{format_real, parse_real, BigReal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Int,
    Text,
    /// Arbitrary-precision real at the given bit count.
    Real(u32),
    /// Binary64 diagnostic.
    Float,
}

impl Kind {
    fn annotation(self) -> String {
        match self {
            Kind::Int => "int".into(),
            Kind::Text => "text".into(),
            Kind::Real(bits) => format!("real@{bits}"),
            Kind::Float => "f64".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Text(String),
    Real(BigReal),
    Float(f64),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Cell) -> bool {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a == b,
            (Cell::Text(a), Cell::Text(b)) => a == b,
            (Cell::Real(a), Cell::Real(b)) => {
                a.prec() == b.prec()
                    && ((a.is_nan() && b.is_nan())
                        || (a == b && a.is_sign_negative() == b.is_sign_negative()))
            }
            (Cell::Float(a), Cell::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Real(v) => format_real(v),
            Cell::Float(v) => format_f64(*v),
        }
    }
}

fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // Rust's shortest representation round-trips.
        format!("{v:e}")
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Free-form context lines, e.g. the subject and point of a run.
    pub notes: Vec<String>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Columns given as `(name, kind)` pairs.
    pub fn new(name: impl Into<String>, columns: &[(&str, Kind)]) -> Table {
        Table {
            name: name.into(),
            notes: Vec::new(),
            columns: columns
                .iter()
                .map(|(n, k)| Column {
                    name: n.to_string(),
                    kind: *k,
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, line: impl Into<String>) -> Table {
        self.notes.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn header(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// One machine-readable pass/fail line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: String,
    pub subject: String,
    pub statistic: String,
    pub threshold: String,
    pub pass: bool,
}

impl Verdict {
    pub fn new(
        verdict: impl Into<String>,
        subject: impl Into<String>,
        statistic: f64,
        threshold: impl Into<String>,
        pass: bool,
    ) -> Verdict {
        Verdict {
            verdict: verdict.into(),
            subject: subject.into(),
            statistic: format_f64(statistic),
            threshold: threshold.into(),
            pass,
        }
    }

    pub fn outcome(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub metadata: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    /// Measured but never written to output files, which must be
    /// reproducible byte for byte.
    pub wall_time: Duration,
}

impl ExperimentResult {
    pub fn exploratory(&self) -> bool {
        self.id.exploratory()
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn label(&self) -> &'static str {
        if self.exploratory() {
            "exploratory"
        } else {
            "reproduction"
        }
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("experiment: {} {}", self.id, self.id.name()),
            format!("label: {}", self.label()),
        ];
        lines.extend(self.metadata.iter().map(|(k, v)| format!("{k}: {v}")));
        lines
    }
}

/// Writes a result. CSV goes to one file per table plus `verdicts.csv` in
/// the directory `path`; JSON is a single document at `path`, or at
/// `path/<id>.json` when `path` has no `.json` extension. Returns the files
/// written.
pub fn emit(result: &ExperimentResult, format: Format, path: &Path) -> Result<Vec<PathBuf>> {
    match format {
        Format::Csv => emit_csv(result, path),
        Format::Json => {
            let file = if path.extension().is_some_and(|e| e == "json") {
                path.to_path_buf()
            } else {
                path.join(format!("{}.json", result.id))
            };
            if let Some(dir) = file.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&file, to_json(result)).map_err(|e| Error::io(&file, e))?;
            Ok(vec![file])
        }
    }
}

fn emit_csv(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for table in &result.tables {
        let file = dir.join(format!("{}.csv", table.name));
        let bytes = table_csv(result, table).map_err(|e| Error::io(&file, e))?;
        fs::write(&file, bytes).map_err(|e| Error::io(&file, e))?;
        written.push(file);
    }
    let file = dir.join("verdicts.csv");
    let bytes = verdicts_csv(result).map_err(|e| Error::io(&file, e))?;
    fs::write(&file, bytes).map_err(|e| Error::io(&file, e))?;
    written.push(file);
    Ok(written)
}

fn comment_block(lines: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    for line in lines {
        out.extend_from_slice(b"# ");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    out
}

/// CSV text of one table, with `#` comment lines describing the run.
pub fn table_csv(result: &ExperimentResult, table: &Table) -> std::io::Result<Vec<u8>> {
    let mut lines = result.header_lines();
    lines.push(format!("table: {}", table.name));
    lines.extend(table.notes.iter().cloned());
    let kinds: Vec<String> = table
        .columns
        .iter()
        .map(|c| format!("{}={}", c.name, c.kind.annotation()))
        .collect();
    lines.push(format!("precision: {}", kinds.join(" ")));
    let mut out = comment_block(&lines);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.header())?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    out.extend(w.into_inner().map_err(|e| e.into_error())?);
    Ok(out)
}

pub fn verdicts_csv(result: &ExperimentResult) -> std::io::Result<Vec<u8>> {
    let mut lines = result.header_lines();
    lines.push("table: verdicts".into());
    let mut out = comment_block(&lines);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["verdict", "subject", "statistic", "threshold", "outcome"])?;
    for v in &result.verdicts {
        w.write_record([&v.verdict, &v.subject, &v.statistic, &v.threshold, v.outcome()])?;
    }
    out.extend(w.into_inner().map_err(|e| e.into_error())?);
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    name: String,
    notes: Vec<String>,
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

#[derive(Serialize, Deserialize)]
struct JsonDocument {
    experiment: String,
    name: String,
    label: String,
    metadata: Vec<(String, String)>,
    tables: Vec<JsonTable>,
    verdicts: Vec<Verdict>,
}

/// Single JSON document. Reals are decimal strings that parse back to the
/// same bits at the column's precision.
pub fn to_json(result: &ExperimentResult) -> String {
    let doc = JsonDocument {
        experiment: result.id.to_string(),
        name: result.id.name().to_string(),
        label: result.label().to_string(),
        metadata: result.metadata.clone(),
        tables: result
            .tables
            .iter()
            .map(|t| JsonTable {
                name: t.name.clone(),
                notes: t.notes.clone(),
                columns: t.columns.clone(),
                rows: t
                    .rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|c| match c {
                                Cell::Int(v) => Value::from(*v),
                                other => Value::from(other.render()),
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
        verdicts: result.verdicts.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("document is serializable");
    s.push('\n');
    s
}

/// Inverse of [`to_json`]; wall time is not serialized and comes back zero.
pub fn from_json(text: &str) -> Result<ExperimentResult> {
    let bad = |m: String| Error::InvalidArgument(format!("result document: {m}"));
    let doc: JsonDocument = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let id: ExperimentId = doc.experiment.parse()?;
    let mut tables = Vec::with_capacity(doc.tables.len());
    for t in doc.tables {
        let mut rows = Vec::with_capacity(t.rows.len());
        for row in &t.rows {
            if row.len() != t.columns.len() {
                return Err(bad(format!("row width mismatch in {}", t.name)));
            }
            let cells = row
                .iter()
                .zip(&t.columns)
                .map(|(v, col)| {
                    let cell = match (col.kind, v) {
                        (Kind::Int, Value::Number(n)) => n.as_i64().map(Cell::Int),
                        (Kind::Text, Value::String(s)) => Some(Cell::Text(s.clone())),
                        (Kind::Real(bits), Value::String(s)) => parse_real(s, bits).ok().map(Cell::Real),
                        (Kind::Float, Value::String(s)) => parse_f64(s).map(Cell::Float),
                        _ => None,
                    };
                    cell.ok_or_else(|| bad(format!("bad cell {v} in column {}", col.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(cells);
        }
        tables.push(Table {
            name: t.name,
            notes: t.notes,
            columns: t.columns,
            rows,
        });
    }
    Ok(ExperimentResult {
        id,
        metadata: doc.metadata,
        tables,
        verdicts: doc.verdicts,
        wall_time: Duration::ZERO,
    })
}

/// Plain-text verdict summary for the terminal.
pub fn summary(result: &ExperimentResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {} ({})", result.id, result.id.name(), result.label())?;
    for (k, v) in &result.metadata {
        writeln!(out, "  {k}: {v}")?;
    }
    for t in &result.tables {
        writeln!(out, "  table {}: {} rows", t.name, t.rows.len())?;
    }
    for v in &result.verdicts {
        writeln!(
            out,
            "  {} {} [{}]: {} (threshold {})",
            v.outcome().to_uppercase(),
            v.verdict,
            v.subject,
            v.statistic,
            v.threshold
        )?;
    }
    Ok(())
}
