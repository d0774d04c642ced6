use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

/// Columns of `results.csv` for estimates and analytic values.
pub const RESULT_HEADER: [&str; 5] = ["quantity", "value", "std_error", "method", "seed"];
/// Columns of `results.csv` for generator and Lévy-measure experiments.
pub const OPERATION_HEADER: [&str; 7] = ["operation", "inputs_digest", "value", "error", "t_list", "n", "seed"];

/// A CSV file produced by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(&self.file);
        let io = |e: csv::Error| HarnessError::io(&path, e.into());
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e6)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn num_list(v: &[f64]) -> String {
    v.iter().map(|&t| num(t)).collect::<Vec<_>>().join(";")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One pass/fail statement about the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// `|a - b| <= k * sqrt(ea^2 + eb^2)`.
    pub fn agree(name: impl Into<String>, a: f64, ea: f64, b: f64, eb: f64, k: f64) -> Self {
        let err = ea.hypot(eb);
        let diff = (a - b).abs();
        let passed = diff <= k * err || diff == 0.0;
        Check::new(
            name,
            passed,
            format!("{} vs {}: |diff| = {} against {k} x {}", num(a), num(b), num(diff), num(err)),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StreamRange {
    pub start: u64,
    pub end: u64,
}

/// Thresholds the harness applies on top of the library tolerances.
#[derive(Clone, Debug, Serialize)]
pub struct CheckThresholds {
    pub equality_z: f64,
    pub strict_inequality_z: f64,
    pub concavity_margin: f64,
}

pub const THRESHOLDS: CheckThresholds = CheckThresholds {
    equality_z: 3.0,
    strict_inequality_z: 5.0,
    concavity_margin: 1e-4,
};

/// Written as `manifest.toml` next to the CSV files.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    /// SHA-256 of the canonical config, which omits `out` and `threads`.
    pub config_digest: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subordinator_normalization: Option<String>,
    /// Replica streams used by every Monte Carlo estimate in the run.
    pub streams: StreamRange,
    pub thresholds: CheckThresholds,
    pub tolerances: toml::Table,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join("manifest.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| HarnessError::io(&path, e))
    }
}

/// Library tolerances, written with [`num`] so tiny values stay readable.
pub fn tolerance_table() -> toml::Table {
    mirrorlab_core::tolerance_record()
        .into_iter()
        .map(|(k, v)| (k.to_string(), toml::Value::String(num(v))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -0.25, 1e-17, 6.02e23, 0.6826894921370859, 123456.5, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1e-17), "1e-17");
        assert_eq!(num(0.5), "0.5");
    }

    #[test]
    fn agreement_check() {
        assert!(Check::agree("a", 1.0, 0.1, 1.25, 0.0, 3.0).passed);
        assert!(!Check::agree("a", 1.0, 0.1, 1.35, 0.0, 3.0).passed);
        assert!(Check::agree("a", 2.0, 0.0, 2.0, 0.0, 3.0).passed);
    }
}
