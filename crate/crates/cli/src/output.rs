//! CSV tables and the run manifest.

use serde::Serialize;
use std::io;
use std::path::Path;

/// JSON schema the manifest conforms to.
pub const MANIFEST_SCHEMA: &str = include_str!("../schema/manifest.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub data: Vec<Vec<f64>>,
}

impl Table {
    pub fn push(&mut self, name: impl Into<String>, unit: &str, values: Vec<f64>) {
        if let Some(first) = self.data.first() {
            assert_eq!(first.len(), values.len(), "column length mismatch");
        }
        self.columns.push(Column { name: name.into(), unit: unit.into() });
        self.data.push(values);
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// Header row plus one row per entry; 17 significant digits, LF endings.
    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.n_rows() {
            w.write_record(self.data.iter().map(|col| format_number(col[i])))?;
        }
        w.flush()
    }
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// How per-realization seeds derive from `seeds`.
    pub seed_derivation: String,
    pub library_version: String,
    pub cli_version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub columns: Vec<Column>,
    pub results: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::default();
        t.push("t", "s", vec![0.0, 0.5]);
        t.push("x", "1", vec![1.0, -1.0]);
        t.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,x\n0.0000000000000000e0,1.0000000000000000e0\n5.0000000000000000e-1,-1.0000000000000000e0\n");
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(MANIFEST_SCHEMA).unwrap();
        assert_eq!(v["type"], "object");
    }
}
