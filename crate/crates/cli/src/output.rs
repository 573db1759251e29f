use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::config::Band;
use crate::CliError;

/// One numeric cell. Floats print as `{:.16e}` (17 significant digits),
/// flags as `0`/`1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Flag(b) => u8::from(b).to_string(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Float(v.unwrap_or(f64::NAN))
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Cell::Int(v) => s.serialize_u64(v),
            // Non-finite values become null.
            Cell::Float(v) => s.serialize_f64(v),
            Cell::Flag(b) => s.serialize_bool(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            file: String::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Comma separated, header row, LF line endings.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub below: f64,
    pub above: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub target: Option<f64>,
    pub measured: Option<f64>,
    pub tolerance: Option<Tolerance>,
    pub pass: bool,
}

impl Criterion {
    pub fn band(name: impl Into<String>, band: &Band, measured: f64) -> Self {
        Criterion {
            name: name.into(),
            target: Some(band.target),
            measured: Some(measured),
            tolerance: Some(Tolerance { below: band.below, above: band.above }),
            pass: band.contains(measured),
        }
    }

    /// `measured <= limit`.
    pub fn at_most(name: impl Into<String>, limit: f64, measured: f64) -> Self {
        Criterion {
            name: name.into(),
            target: Some(limit),
            measured: Some(measured),
            tolerance: Some(Tolerance { below: f64::INFINITY, above: Some(0.0) }),
            pass: measured <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedEntry {
    pub name: String,
    pub seed: u64,
}

/// Everything an experiment produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub seeds: Vec<SeedEntry>,
    pub criteria: Vec<Criterion>,
}

impl Report {
    pub fn seed(&mut self, name: impl Into<String>, seed: u64) {
        self.seeds.push(SeedEntry { name: name.into(), seed });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

/// The JSON document written next to the CSV tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: String,
    /// The effective configuration as TOML (TOML keeps `inf`, JSON cannot).
    pub config_echo: String,
    pub config_hash: String,
    pub seeds: Vec<SeedEntry>,
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
}

pub fn emit_summary(command: &str, config_echo: String, mut report: Report) -> Summary {
    let stem = command.replace('-', "_");
    for t in &mut report.tables {
        t.file = format!("{stem}_{}.csv", t.name);
    }
    Summary {
        command: command.to_string(),
        config_hash: crate::config::config_hash(&config_echo),
        config_echo,
        seeds: report.seeds,
        tables: report.tables,
        criteria: report.criteria,
    }
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes every table and `<stem>.json` under `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let p = dir.join(&t.file);
            write_file(&p, &t.to_csv()?)?;
            paths.push(p);
        }
        let p = dir.join(format!("{}.json", self.command.replace('-', "_")));
        write_file(&p, self.to_json().as_bytes())?;
        paths.push(p);
        Ok(paths)
    }
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(p).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
    f.write_all(bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut t = Table::new("x", &["n", "v", "ok"]);
        t.push(vec![8usize.into(), 0.1.into(), true.into()]);
        t.push(vec![16usize.into(), f64::NAN.into(), false.into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "n,v,ok\n8,1.0000000000000001e-1,1\n16,NaN,0\n");
    }

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE] {
            let s = Cell::Float(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn empty_criteria_is_valid_json() {
        let s = emit_summary("fn-en", "seed = 1\n".into(), Report::default());
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["criteria"], serde_json::json!([]));
        assert_eq!(v["command"], "fn-en");
    }

    #[test]
    fn file_names_follow_command() {
        let mut r = Report::default();
        r.tables.push(Table::new("curve", &["n"]));
        let s = emit_summary("lse-rate", String::new(), r);
        assert_eq!(s.tables[0].file, "lse_rate_curve.csv");
    }
}
