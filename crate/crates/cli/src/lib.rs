//! Experiment harness: TOML configs, validated runs, CSV tables and run manifests.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{validate, Experiment, ExperimentConfig, SubordinatorConfig};
pub use error::HarnessError;
pub use output::{Check, RunManifest, Table};

use experiments::{run_experiment, Outcome, Setup};
use output::{sha256_hex, tolerance_table, StreamRange, THRESHOLDS};

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub tables: Vec<Table>,
    pub out: PathBuf,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

/// Validates `config`, runs the experiment on a pool of `config.threads`
/// workers and writes every table plus `manifest.toml` into `config.out`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let diagnostics = validate(config);
    if !diagnostics.is_empty() {
        return Err(HarnessError::Config(diagnostics));
    }
    let started = Instant::now();
    let setup = Setup::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| HarnessError::Config(vec![format!("threads: cannot start worker pool: {e}")]))?;
    let Outcome { tables, checks } = pool.install(|| run_experiment(&setup))?;
    let threads = pool.current_num_threads();

    let out = config.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    for table in &tables {
        table.write(&out)?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment.name().into(),
        config_digest: sha256_hex(config.canonical().as_bytes()),
        seed: config.seed,
        threads,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        passed: checks.iter().all(|c| c.passed),
        files: tables.iter().map(|t| t.file.clone()).collect(),
        subordinator_normalization: setup.spec.map(|s| s.describe()),
        streams: StreamRange {
            start: 0,
            end: config.replicas,
        },
        thresholds: THRESHOLDS,
        tolerances: tolerance_table(),
        config: config.clone(),
        checks,
    };
    manifest.write(&out)?;
    Ok(RunReport { manifest, tables, out })
}
