//! Typed result tables and their CSV/JSON renderings.
//!
//! CSV layout:
//!
//! ```text
//! # experiment: perf_sweep
//! # seed: 7
//! # version: cfisac 0.1.0
//! # spec: {"name":"perf_sweep",...}
//! # columns: L:int,M:int,metric:text,closed:float
//! L,M,metric,closed
//! 10,9,comm_sum_se,1.2345678901234567e1
//! ```
//!
//! Floats carry 17 significant digits, missing cells are empty and lines end
//! with LF. The `spec` line holds the fully resolved experiment spec, so a
//! table can be re-run from its own metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value as Json};

use crate::error::{HarnessError, Result};
use crate::spec::ExperimentSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    Text,
    Bool,
}

impl ColumnType {
    fn tag(self) -> &'static str {
        match self {
            ColumnType::Int => "int",
            ColumnType::Float => "float",
            ColumnType::Text => "text",
            ColumnType::Bool => "bool",
        }
    }

    fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "int" => ColumnType::Int,
            "float" => ColumnType::Float,
            "text" => ColumnType::Text,
            "bool" => ColumnType::Bool,
            other => return Err(HarnessError::format("column type", other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnType,
}

impl Column {
    pub fn new(name: &str, kind: ColumnType) -> Self {
        Self { name: name.to_string(), kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Float(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    fn matches(&self, kind: ColumnType) -> bool {
        matches!(
            (self, kind),
            (Value::Missing, _)
                | (Value::Int(_), ColumnType::Int)
                | (Value::Float(_), ColumnType::Float)
                | (Value::Text(_), ColumnType::Text)
                | (Value::Bool(_), ColumnType::Bool)
        )
    }

    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format!("{v:.16e}"),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Missing => String::new(),
        }
    }

    fn parse(cell: &str, kind: ColumnType) -> Result<Self> {
        if cell.is_empty() && kind != ColumnType::Text {
            return Ok(Value::Missing);
        }
        let bad = |e: &dyn std::fmt::Display| HarnessError::format("cell", format!("{cell:?}: {e}"));
        Ok(match kind {
            ColumnType::Int => Value::Int(cell.parse().map_err(|e| bad(&e))?),
            ColumnType::Float => Value::Float(cell.parse().map_err(|e| bad(&e))?),
            ColumnType::Bool => Value::Bool(cell.parse().map_err(|e| bad(&e))?),
            ColumnType::Text => Value::Text(cell.to_string()),
        })
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Int(v) => json!(v),
            // JSON has no inf/NaN; keep the CSV spelling as a string
            Value::Float(v) if v.is_finite() => json!(v),
            Value::Float(v) => json!(v.to_string()),
            Value::Text(s) => json!(s),
            Value::Bool(b) => json!(b),
            Value::Missing => Json::Null,
        }
    }

    fn from_json(v: &Json, kind: ColumnType) -> Result<Self> {
        let bad = || HarnessError::format("json cell", v);
        Ok(match (v, kind) {
            (Json::Null, _) => Value::Missing,
            (Json::Number(n), ColumnType::Int) => Value::Int(n.as_i64().ok_or_else(bad)?),
            (Json::Number(n), ColumnType::Float) => Value::Float(n.as_f64().ok_or_else(bad)?),
            (Json::String(s), ColumnType::Float) => Value::Float(s.parse().map_err(|_| bad())?),
            (Json::String(s), ColumnType::Text) => Value::Text(s.clone()),
            (Json::Bool(b), ColumnType::Bool) => Value::Bool(*b),
            _ => return Err(bad()),
        })
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    pub spec: ExperimentSpec,
}

impl Metadata {
    /// Metadata of a run of `spec`. The output path is dropped: where a
    /// table is written does not change its content.
    pub fn for_spec(spec: &ExperimentSpec) -> Self {
        Self {
            experiment: spec.name.as_str().to_string(),
            seed: spec.seed,
            version: version_tag(),
            spec: ExperimentSpec { output: None, ..spec.clone() },
        }
    }
}

pub fn version_tag() -> String {
    format!("cfisac {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>, metadata: Metadata) -> Self {
        Self { columns, rows: Vec::new(), metadata }
    }

    /// Appends a row after checking its arity and cell types.
    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(HarnessError::format(
                "row",
                format!("{} cells for {} columns", row.len(), self.columns.len()),
            ));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            if !v.matches(c.kind) {
                return Err(HarnessError::format("row", format!("{v:?} in {} column {}", c.kind.tag(), c.name)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Cells of column `name`, empty when the column does not exist.
    pub fn column(&self, name: &str) -> Vec<&Value> {
        match self.column_index(name) {
            Some(i) => self.rows.iter().map(|r| &r[i]).collect(),
            None => Vec::new(),
        }
    }

    /// Rows whose text/int cells equal the given values.
    pub fn select(&self, filters: &[(&str, Value)]) -> Vec<&Vec<Value>> {
        let idx: Vec<(usize, &Value)> =
            filters.iter().filter_map(|(n, v)| self.column_index(n).map(|i| (i, v))).collect();
        if idx.len() != filters.len() {
            return Vec::new();
        }
        self.rows.iter().filter(|r| idx.iter().all(|(i, v)| &r[*i] == *v)).collect()
    }

    /// True for an optimizer table in which no instance was feasible.
    pub fn infeasible_everywhere(&self) -> bool {
        let flags = self.column("feasible");
        !flags.is_empty() && flags.iter().all(|v| v.as_bool() != Some(true))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        let m = &self.metadata;
        let spec = serde_json::to_string(&m.spec).map_err(|e| HarnessError::format("spec", e))?;
        let _ = writeln!(out, "# experiment: {}", m.experiment);
        let _ = writeln!(out, "# seed: {}", m.seed);
        let _ = writeln!(out, "# version: {}", m.version);
        let _ = writeln!(out, "# spec: {spec}");
        let types: Vec<String> = self.columns.iter().map(|c| format!("{}:{}", c.name, c.kind.tag())).collect();
        let _ = writeln!(out, "# columns: {}", types.join(","));

        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| HarnessError::format("csv", e);
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::render)).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| HarnessError::format("csv", e))?;
        out.push_str(&String::from_utf8(body).map_err(|e| HarnessError::format("csv", e))?);
        Ok(out)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let (k, v) = rest
                .trim_end_matches('\n')
                .split_once(": ")
                .ok_or_else(|| HarnessError::format("metadata line", line.trim_end()))?;
            fields.insert(k.to_string(), v.to_string());
            body_start += line.len();
        }
        let field = |k: &str| fields.get(k).ok_or_else(|| HarnessError::format("metadata", format!("missing `{k}`")));
        let spec: ExperimentSpec =
            serde_json::from_str(field("spec")?).map_err(|e| HarnessError::format("spec metadata", e))?;
        let metadata = Metadata {
            experiment: field("experiment")?.clone(),
            seed: field("seed")?.parse().map_err(|e| HarnessError::format("seed", e))?,
            version: field("version")?.clone(),
            spec,
        };
        let columns = field("columns")?
            .split(',')
            .map(|c| {
                let (name, tag) = c.rsplit_once(':').ok_or_else(|| HarnessError::format("column", c))?;
                Ok(Column::new(name, ColumnType::from_tag(tag)?))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(&text.as_bytes()[body_start..]);
        let header = rd.headers().map_err(|e| HarnessError::format("csv", e))?;
        if header.len() != columns.len() || header.iter().zip(&columns).any(|(h, c)| h != c.name) {
            return Err(HarnessError::format("csv header", header.iter().collect::<Vec<_>>().join(",")));
        }
        let mut table = ResultTable::new(columns, metadata);
        for rec in rd.records() {
            let rec = rec.map_err(|e| HarnessError::format("csv", e))?;
            let row = rec
                .iter()
                .zip(&table.columns)
                .map(|(cell, c)| Value::parse(cell, c.kind))
                .collect::<Result<Vec<_>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn to_json_value(&self) -> Result<Json> {
        let m = &self.metadata;
        Ok(json!({
            "metadata": {
                "experiment": m.experiment,
                "seed": m.seed,
                "version": m.version,
                "spec": serde_json::to_value(&m.spec).map_err(|e| HarnessError::format("spec", e))?,
            },
            "columns": self.columns.iter().map(|c| json!({"name": c.name, "type": c.kind.tag()})).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }))
    }

    pub fn from_json_value(v: &Json) -> Result<Self> {
        let bad = |what: &'static str| HarnessError::format("table json", what);
        let m = v.get("metadata").ok_or_else(|| bad("metadata"))?;
        let text = |key: &'static str| m.get(key).and_then(Json::as_str).map(str::to_string).ok_or_else(|| bad(key));
        let metadata = Metadata {
            experiment: text("experiment")?,
            seed: m.get("seed").and_then(Json::as_u64).ok_or_else(|| bad("seed"))?,
            version: text("version")?,
            spec: serde_json::from_value(m.get("spec").cloned().ok_or_else(|| bad("spec"))?)
                .map_err(|e| HarnessError::format("spec metadata", e))?,
        };
        let columns = v
            .get("columns")
            .and_then(Json::as_array)
            .ok_or_else(|| bad("columns"))?
            .iter()
            .map(|c| {
                let name = c.get("name").and_then(Json::as_str).ok_or_else(|| bad("column name"))?;
                let tag = c.get("type").and_then(Json::as_str).ok_or_else(|| bad("column type"))?;
                Ok(Column::new(name, ColumnType::from_tag(tag)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = ResultTable::new(columns, metadata);
        for row in v.get("rows").and_then(Json::as_array).ok_or_else(|| bad("rows"))? {
            let cells = row.as_array().ok_or_else(|| bad("row"))?;
            if cells.len() != table.columns.len() {
                return Err(bad("row arity"));
            }
            let row = cells
                .iter()
                .zip(&table.columns)
                .map(|(c, col)| Value::from_json(c, col.kind))
                .collect::<Result<Vec<_>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| HarnessError::io(path, e))
    }

    pub fn emit_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json_value()?).map_err(|e| HarnessError::format("json", e))?;
        fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }

    /// Writes JSON for a `.json` path and CSV otherwise.
    pub fn emit(&self, path: &Path) -> Result<()> {
        if is_json(path) {
            self.emit_json(path)
        } else {
            self.emit_csv(path)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        if is_json(path) {
            let v: Json = serde_json::from_str(&text).map_err(|e| HarnessError::format("json", e))?;
            Self::from_json_value(&v)
        } else {
            Self::from_csv_str(&text)
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
