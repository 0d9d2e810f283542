//! Tabular reports rendered as TSV or JSON.
//!
//! TSV writes floats with 17 significant digits (`{:.16e}`); JSON uses the
//! shortest representation that round-trips. Both therefore carry the same
//! `f64` values.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

use crate::error::CliError;

pub const TOOL: &str = "opstat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

/// Rendering and decision options shared by the reporting commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportSpec {
    pub format: Format,
    pub normalized: bool,
    pub alpha: f64,
    pub bonferroni: Option<u64>,
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self {
            format: Format::Tsv,
            normalized: false,
            alpha: 0.05,
            bonferroni: None,
        }
    }
}

impl ReportSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::config("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if self.bonferroni == Some(0) {
            return Err(CliError::config("bonferroni", "m must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

pub fn tsv_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn tsv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => tsv_float(*v),
            Cell::Text(s) => s.replace(['\t', '\n', '\r'], " "),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => "NA".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => match Number::from_f64(*v) {
                Some(n) => Value::Number(n),
                None => Value::String(tsv_float(*v)),
            },
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }
}

/// A command's output: provenance metadata, notices and tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub meta: Vec<(String, Cell)>,
    pub notices: Vec<String>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            meta: Vec::new(),
            notices: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn notice(&mut self, text: impl Into<String>) -> &mut Self {
        let text = text.into();
        if !self.notices.contains(&text) {
            self.notices.push(text);
        }
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.tables.push(table);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Tsv => self.to_tsv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {TOOL} {VERSION}");
        let _ = writeln!(out, "# command: {}", self.command);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {}", v.tsv());
        }
        for n in &self.notices {
            let _ = writeln!(out, "# notice: {n}");
        }
        for t in &self.tables {
            let _ = writeln!(out, "#");
            let _ = writeln!(out, "# table: {}", t.name);
            let _ = writeln!(out, "{}", t.columns.join("\t"));
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::tsv).collect();
                let _ = writeln!(out, "{}", cells.join("\t"));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut root = Map::new();
        root.insert("tool".into(), TOOL.into());
        root.insert("version".into(), VERSION.into());
        root.insert("command".into(), self.command.clone().into());
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        root.insert("meta".into(), Value::Object(meta));
        root.insert(
            "notices".into(),
            Value::Array(self.notices.iter().cloned().map(Value::String).collect()),
        );
        let mut tables = Map::new();
        for t in &self.tables {
            let rows = t
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        t.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect();
            tables.insert(t.name.clone(), Value::Array(rows));
        }
        root.insert("tables".into(), Value::Object(tables));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).unwrap_or_default();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo");
        r.meta("seed", 7u64).meta("epsilon", Cell::Missing);
        r.notice("hello");
        let mut t = Table::new("values", &["name", "x"]);
        t.push(vec!["a".into(), 0.1.into()]);
        t.push(vec!["b".into(), (1.0 / 3.0).into()]);
        t.push(vec!["c".into(), f64::INFINITY.into()]);
        r.table(t);
        r
    }

    #[test]
    fn tsv_layout() {
        let s = sample().to_tsv();
        assert!(s.starts_with("# tool: opstat "));
        assert!(s.contains("# seed: 7\n# epsilon: NA\n# notice: hello\n"));
        assert!(s.contains("name\tx\na\t1.0000000000000001e-1\n"));
        assert!(s.contains("c\tinf\n"));
    }

    #[test]
    fn tsv_and_json_agree() {
        let r = sample();
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        let rows = json["tables"]["values"].as_array().unwrap();
        let tsv = r.to_tsv();
        let tsv_vals: Vec<f64> = tsv
            .lines()
            .filter(|l| l.starts_with("a\t") || l.starts_with("b\t"))
            .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
            .collect();
        for (row, v) in rows.iter().zip(tsv_vals) {
            assert_eq!(row["x"].as_f64().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(rows[2]["x"], "inf");
        assert_eq!(json["meta"]["seed"], 7);
    }

    #[test]
    fn spec_validation() {
        assert!(ReportSpec::default().validate().is_ok());
        let bad = ReportSpec { alpha: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(CliError::Config { .. })));
    }
}
