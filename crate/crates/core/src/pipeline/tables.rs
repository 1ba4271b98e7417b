//! Comma-separated output tables and the key-value run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use crate::interest::TransitionMatrix;
use crate::stats::Histogram;

use super::PipelineError;

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, PipelineError> {
        let path = dir.join(name);
        fs::write(&path, self.to_bytes()).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// Shortest round-trip representation, so equal values print identically.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn histogram_rows(table: &mut Table, name: &str, h: &Histogram) {
    let centers = h.centers();
    let dens = h.densities();
    for (i, &c) in h.counts.iter().enumerate() {
        table.push(vec![
            name.to_string(),
            num(h.edges[i]),
            num(h.edges[i + 1]),
            num(centers[i]),
            c.to_string(),
            num(dens[i]),
        ]);
    }
}

/// Labelled square table: first column holds the source label, the header
/// the destination labels.
pub fn matrix_table(m: &TransitionMatrix) -> Table {
    let mut header = vec!["from".to_string()];
    header.extend(m.labels.iter().cloned());
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for (label, row) in m.labels.iter().zip(&m.counts) {
        let mut cells = vec![label.clone()];
        cells.extend(row.iter().map(u64::to_string));
        t.push(cells);
    }
    t
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

/// Manifest keys whose values legitimately differ between identical runs.
pub const VOLATILE_KEYS: [&str; 1] = ["started_at"];

impl Manifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={}\n", v.replace('\n', " ")))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }

    /// The manifest without volatile entries, for run-to-run comparison.
    pub fn stable_text(&self) -> String {
        Manifest {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| !VOLATILE_KEYS.contains(&k.as_str()))
                .cloned()
                .collect(),
        }
        .to_text()
    }
}
