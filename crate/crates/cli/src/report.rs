use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;

/// One named check with its measured value and threshold. `cmp` records
/// the direction the comparison ran, for the human reading the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub cmp: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRecord {
    pub experiment: String,
    pub config: ResolvedConfig,
    pub csv_header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub assertions: Vec<Assertion>,
    pub runtime_seconds: f64,
    pub version: String,
}

impl ReportRecord {
    pub fn new(config: ResolvedConfig, csv_header: &[&str]) -> Self {
        ReportRecord {
            experiment: config.experiment.clone(),
            config,
            csv_header: csv_header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            assertions: Vec::new(),
            runtime_seconds: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.csv_header.len());
        self.rows.push(row);
    }

    /// Check `value cmp threshold`, honoring a tolerance override of the
    /// same name from the config.
    pub fn assert_le(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        let threshold = self.override_for(name, threshold);
        let pass = value <= threshold;
        self.assertions.push(Assertion {
            name: name.to_string(),
            pass,
            value,
            threshold,
            cmp: "<=".into(),
        });
        pass
    }

    pub fn assert_ge(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        let threshold = self.override_for(name, threshold);
        let pass = value >= threshold;
        self.assertions.push(Assertion {
            name: name.to_string(),
            pass,
            value,
            threshold,
            cmp: ">=".into(),
        });
        pass
    }

    pub fn assert_in(&mut self, name: &str, value: f64, lo: f64, hi: f64) -> bool {
        let a = self.assert_ge(&format!("{name}.low"), value, lo);
        let b = self.assert_le(&format!("{name}.high"), value, hi);
        a && b
    }

    fn override_for(&self, name: &str, default: f64) -> f64 {
        self.config
            .tolerances
            .get(name)
            .copied()
            .unwrap_or(default)
    }

    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.experiment))
    }

    pub fn json_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", self.experiment))
    }

    pub fn write_files(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = self.csv_path(dir);
        let mut csv = std::fs::File::create(&csv_path)?;
        writeln!(csv, "{}", self.csv_header.join(","))?;
        for row in &self.rows {
            writeln!(csv, "{}", row.join(","))?;
        }
        let json_path = self.json_path(dir);
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&json_path, json)?;
        Ok((csv_path, json_path))
    }

    pub fn print_summary(&self) {
        for a in &self.assertions {
            println!(
                "{} {} value={:.6e} {} {:.6e}",
                if a.pass { "PASS" } else { "FAIL" },
                a.name,
                a.value,
                a.cmp,
                a.threshold
            );
        }
        println!(
            "{}: {}/{} checks passed in {:.2}s",
            self.experiment,
            self.assertions.iter().filter(|a| a.pass).count(),
            self.assertions.len(),
            self.runtime_seconds
        );
    }
}

/// Fixed 12-decimal formatting keeps CSV output byte-stable across runs.
pub fn fmt12(x: f64) -> String {
    format!("{x:.12}")
}
