//! Rectangular result tables with a names row and a units row.

use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
    /// Only recorded for outputs that consumed random numbers.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Scientific notation with 12 significant digits.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

impl ResultTable {
    pub fn new(spec: &[(&str, &str)]) -> Self {
        Self {
            columns: spec.iter().map(|c| c.0.to_string()).collect(),
            units: spec.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        w.write_record(&self.units).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| format_value(x))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let mut records = rd.records();
        let mut next_row = |what: &str| -> Result<Vec<String>, CliError> {
            let rec = records
                .next()
                .ok_or_else(|| CliError::Config(format!("missing {what} row")))?
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(rec.iter().map(String::from).collect())
        };
        let columns = next_row("names")?;
        let units = next_row("units")?;
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
            let row = rec.iter().map(|s| s.parse::<f64>().map_err(|e| CliError::Config(format!("{s}: {e}")))).collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, units, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn write_json(path: &Path, meta: &Metadata, summary: serde_json::Value) -> Result<(), CliError> {
    let doc = serde_json::json!({ "metadata": meta, "summary": summary });
    let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
