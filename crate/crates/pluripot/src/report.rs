//! Machine-readable run reports: JSON documents and CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Crate version embedded in reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Commit embedded in reports, taken from `PLURIPOT_COMMIT` at build time.
pub fn commit() -> &'static str {
    option_env!("PLURIPOT_COMMIT").unwrap_or("unknown")
}

/// Direction of a contract comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One asserted metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contract {
    pub metric: String,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub passed: bool,
}

impl Contract {
    pub fn at_most(metric: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { metric: metric.into(), value, bound: Bound::AtMost, limit, passed: value <= limit }
    }

    pub fn at_least(metric: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { metric: metric.into(), value, bound: Bound::AtLeast, limit, passed: value >= limit }
    }

    /// A boolean contract recorded as `1 >= 1` or `0 >= 1`.
    pub fn holds(metric: impl Into<String>, ok: bool) -> Self {
        Self::at_least(metric, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// A JSON report. Field order and number formatting are fixed, and nothing depends on
/// wall-clock time, so identical inputs give identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub commit: &'static str,
    pub op: String,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub inputs: Value,
    pub metrics: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub contracts: Vec<Contract>,
    pub passed: bool,
}

impl Report {
    pub fn new(op: impl Into<String>, inputs: impl Serialize) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            commit: commit(),
            op: op.into(),
            scenario: None,
            seed: None,
            inputs: serde_json::to_value(inputs)?,
            metrics: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            contracts: Vec::new(),
            passed: true,
        })
    }

    pub fn scenario(mut self, name: &str) -> Self {
        self.scenario = Some(name.to_owned());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn metric(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.metrics.insert(name.to_owned(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_owned(), value);
    }

    pub fn contract(&mut self, c: Contract) {
        self.passed &= c.passed;
        self.contracts.push(c);
    }

    /// Contracts that failed.
    pub fn failures(&self) -> Vec<&Contract> {
        self.contracts.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, self.to_json()?).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

/// A CSV table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `<dir>/<stem>.csv`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
        w.write_record(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

/// Shortest round-trip formatting of a float for tables.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contracts_fold_into_passed() {
        let mut r = Report::new("test", serde_json::json!({"a": 1})).unwrap();
        r.contract(Contract::at_most("x", 1.0, 2.0));
        assert!(r.passed);
        r.contract(Contract::at_least("y", 1.0, 2.0));
        r.contract(Contract::holds("z", true));
        assert!(!r.passed);
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.failures()[0].metric, "y");
    }

    #[test]
    fn serialization_is_stable() {
        let build = || {
            let mut r = Report::new("op", serde_json::json!({"b": 2, "a": [1.5, 2.5]})).unwrap().seed(3);
            r.metric("m", 0.1 + 0.2).unwrap();
            r.tolerance("t", 1e-8);
            r.to_json().unwrap()
        };
        let a = build();
        assert_eq!(a, build());
        assert!(a.contains("\"schema_version\": 1") && a.contains("0.30000000000000004"));
    }

    #[test]
    fn table_round_trip() {
        let dir = std::env::temp_dir().join(format!("pluripot-table-{}", std::process::id()));
        let mut t = Table::new(&["eps", "value"]);
        t.push(vec![num(0.5), num(1.0 / 3.0)]);
        let path = t.write(&dir, "t").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("eps,value"));
        let back: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
        fs::remove_dir_all(dir).unwrap();
    }
}
