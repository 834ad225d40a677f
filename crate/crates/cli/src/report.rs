//! In-memory results of one run, written to disk only once the run has
//! finished.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Bounds bracket the comparison without deciding it.
    Inconclusive,
    /// A measured quantity with no pass/fail criterion.
    Measured,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One line of `report.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub config_hash: String,
    pub command: &'static str,
    pub case: String,
    pub n: usize,
    pub k: Option<i64>,
    pub p: Option<f64>,
    pub trial: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

/// A CSV table written under `fields/`.
#[derive(Clone, Debug, Default)]
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
}

pub struct Report {
    command: &'static str,
    config_hash: String,
    seed: u64,
    rows: Vec<Row>,
    tables: BTreeMap<String, Table>,
    measured: BTreeMap<String, Value>,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs != 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

impl Report {
    pub fn new(command: &'static str, config_hash: String, seed: u64) -> Self {
        Self { command, config_hash, seed, rows: Vec::new(), tables: BTreeMap::new(), measured: BTreeMap::new() }
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Adds a row; `case`, sizes and the compared pair are required, the
    /// rest is optional.
    pub fn row(&mut self, case: impl Into<String>, n: usize, lhs: f64, rhs: f64, verdict: Verdict) -> &mut Row {
        self.rows.push(Row {
            config_hash: self.config_hash.clone(),
            command: self.command,
            case: case.into(),
            n,
            k: None,
            p: None,
            trial: None,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            verdict,
        });
        self.rows.last_mut().expect("just pushed")
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn table(&mut self, name: &str, header: &[&str]) -> &mut Table {
        self.tables.entry(name.to_string()).or_insert_with(|| Table::new(header))
    }

    pub fn measure(&mut self, key: &str, value: impl Serialize) {
        self.measured.insert(key.to_string(), serde_json::to_value(value).expect("serialisable"));
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn summary(&self) -> Value {
        let count = |v: Verdict| self.rows.iter().filter(|r| r.verdict == v).count();
        json!({
            "schema_version": crate::config::SCHEMA_VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "verdict": if self.passed() { "pass" } else { "fail" },
            "rows": self.rows.len(),
            "pass": count(Verdict::Pass),
            "fail": count(Verdict::Fail),
            "inconclusive": count(Verdict::Inconclusive),
            "measured": self.measured,
        })
    }

    /// Writes `report.csv`, `fields/*.csv` and `summary.json`. Every field
    /// table gets a leading `config_hash` column.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        if !self.tables.is_empty() {
            let fields = dir.join("fields");
            fs::create_dir_all(&fields)?;
            for (name, table) in &self.tables {
                let mut w = csv::Writer::from_path(fields.join(format!("{name}.csv")))?;
                let mut header = vec!["config_hash".to_string()];
                header.extend(table.header.iter().cloned());
                w.write_record(&header)?;
                for row in &table.rows {
                    let mut record = vec![self.config_hash.clone()];
                    record.extend(row.iter().cloned());
                    w.write_record(&record)?;
                }
                w.flush()?;
            }
        }
        let summary = serde_json::to_string_pretty(&self.summary()).expect("summary serialises");
        fs::write(dir.join("summary.json"), summary + "\n")?;
        Ok(())
    }
}
