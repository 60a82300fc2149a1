//! CSV output with a `#`-prefixed provenance block.

use std::fmt::Write as _;

use crate::config::RunConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            // 12 significant digits
            Cell::Float(v) => write!(out, "{v:.11e}").expect("string write"),
            Cell::Int(v) => write!(out, "{v}").expect("string write"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                write!(out, "\"{}\"", s.replace('"', "\"\"")).expect("string write")
            }
            Cell::Text(s) => out.push_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    columns: Vec<String>,
    units: Vec<(String, String)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Table { name: name.into(), columns, units: Vec::new(), rows: Vec::new() }
    }

    pub fn with_columns(name: &str, columns: &[&str]) -> Self {
        Self::new(name, columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn unit(mut self, column: &str, unit: &str) -> Self {
        self.units.push((column.to_owned(), unit.to_owned()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Column names and data rows, without the comment block.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, experiment: &str, config: &RunConfig) -> String {
        let mut out = provenance(experiment, &self.name, config);
        let units: Vec<String> = self.units.iter().map(|(c, u)| format!("{c}={u}")).collect();
        let _ = writeln!(out, "# units: {}", if units.is_empty() { "dimensionless".into() } else { units.join("; ") });
        out.push_str(&self.body());
        out
    }
}

/// Comment block shared by every output file.
pub fn provenance(experiment: &str, artifact: &str, config: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vibfilter {experiment} {artifact}");
    let _ = writeln!(out, "# format_version: {FORMAT_VERSION}");
    let _ = writeln!(out, "# crate_version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# config_sha256: {}", config.sha256());
    let _ = writeln!(out, "# seed: {}", config.run.seed);
    let _ = writeln!(out, "# log_base: e (entropies in nats)");
    let _ = writeln!(out, "# energies in units of U_int, detunings in units of U_00, probabilities dimensionless");
    out.push_str("# config:\n");
    for line in config.canonical().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "#   {line}");
        }
    }
    out
}
