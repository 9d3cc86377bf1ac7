use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// One table entry: a number (written at full precision) or a label.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest string that round-trips
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
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

/// Tabulated output of one experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub slopes: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn flag(&mut self, key: &str, ok: bool) {
        self.flags.insert(key.to_string(), ok);
    }

    /// True iff every flag is set (vacuously true without flags).
    pub fn passed(&self) -> bool {
        self.flags.values().all(|&v| v)
    }

    /// Numeric column by name, skipping labels.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .filter_map(|r| match r.get(i) {
                    Some(Cell::Num(v)) => Some(*v),
                    _ => None,
                })
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| c.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `{name}-{n}-{p}-{stamp}.csv` and `.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path, n: usize, p: f64, stamp: &str) -> Result<(PathBuf, PathBuf)> {
        let stem = format!("{}-{}-{}-{}", self.name, n, p, stamp);
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        std::fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }

    /// `name: PASS|FAIL (flag=..., ...)`.
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.flags.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
        if failed.is_empty() {
            format!("{}: PASS", self.name)
        } else {
            format!("{}: FAIL ({})", self.name, failed.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_keeps_full_precision() {
        let mut r = ExperimentReport::new("demo", &["eps", "label"]);
        r.push_row(vec![Cell::Num(0.1 + 0.2), "x".into()]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eps,label\n0.30000000000000004,x\n");
        assert!(r.passed());
        r.flag("slope", false);
        assert_eq!(r.summary_line(), "demo: FAIL (slope)");
    }
}
