//! results.csv, summary.json and config.echo.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use pamfk::Warning;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows of one results table; cells are stored preformatted so the bytes
/// written never depend on anything but the values.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

/// Shortest round-trip formatting; non-finite values print as `nan`, `inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn warn_cell(w: &[Warning]) -> String {
    pamfk::stats::join_warnings(w)
}

/// Everything a subcommand reports besides its table.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub table: Table,
    pub verdicts: BTreeMap<String, bool>,
    pub z_scores: BTreeMap<String, f64>,
    pub warnings: BTreeSet<String>,
    pub details: serde_json::Map<String, Value>,
}

impl Report {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            table: Table::new(header),
            ..Default::default()
        }
    }

    pub fn verdict(&mut self, name: impl Into<String>, pass: bool) {
        self.verdicts.insert(name.into(), pass);
    }

    pub fn z(&mut self, name: impl Into<String>, z: f64) {
        self.z_scores.insert(name.into(), z);
    }

    pub fn warn(&mut self, w: &[Warning]) {
        self.warnings.extend(w.iter().map(|w| w.as_str().to_string()));
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable detail"),
        );
    }

    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub master_seed: u64,
    /// `pass`, `fail` or `error`.
    pub status: &'static str,
    pub verdicts: BTreeMap<String, bool>,
    pub z_scores: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub details: serde_json::Map<String, Value>,
    pub error: Option<ErrorInfo>,
}

impl<'a> Summary<'a> {
    pub fn from_report(subcommand: &'a str, master_seed: u64, r: &Report) -> Self {
        Self {
            tool: "pamfk",
            version: VERSION,
            subcommand,
            master_seed,
            status: if r.passed() { "pass" } else { "fail" },
            verdicts: r.verdicts.clone(),
            // JSON has no infinities; those become strings.
            z_scores: r.z_scores.iter().map(|(k, &z)| (k.clone(), json_number(z))).collect(),
            warnings: r.warnings.iter().cloned().collect(),
            details: r.details.clone(),
            error: None,
        }
    }

    pub fn from_error(subcommand: &'a str, master_seed: u64, kind: &str, message: String) -> Self {
        Self {
            tool: "pamfk",
            version: VERSION,
            subcommand,
            master_seed,
            status: "error",
            verdicts: BTreeMap::new(),
            z_scores: BTreeMap::new(),
            warnings: Vec::new(),
            details: serde_json::Map::new(),
            error: Some(ErrorInfo {
                kind: kind.to_string(),
                message,
            }),
        }
    }
}

pub fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(num(x)))
}

pub fn write_outputs(
    dir: &Path,
    table: Option<&Table>,
    summary: &Summary<'_>,
    config_text: &str,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(t) = table {
        std::fs::write(dir.join("results.csv"), t.to_csv())?;
    }
    let mut json = serde_json::to_string_pretty(summary).expect("summary serializes");
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    std::fs::write(dir.join("config.echo"), config_text)?;
    Ok(())
}
