//! Scenario runner for the `eprsim-core` interferometer model: TOML
//! configuration, named studies, CSV curves and a JSON run manifest.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{default_config_text, Config};
pub use output::{RunManifest, Table};
pub use scenarios::ScenarioName;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown scenario `{0}`; known: {known}", known = known_scenarios())]
    UnknownScenario(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] eprsim_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("output: {0}")]
    Output(String),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::UnknownScenario(_) => 2,
            RunError::Config(_) => 3,
            RunError::Model(eprsim_core::Error::InvalidParameter { .. }) => 3,
            _ => 1,
        }
    }
}

fn known_scenarios() -> String {
    ScenarioName::ALL.map(|n| n.as_str()).join(", ")
}

/// Runs one scenario and writes its CSV files and `manifest.json` into
/// `out_dir`.
pub fn run_scenario(name: &str, config: &Config, out_dir: &Path) -> Result<RunManifest, RunError> {
    let scenario: ScenarioName = name.parse()?;
    let start = Instant::now();
    let out = scenarios::execute(scenario, config)?;
    let files = output::write_tables(out_dir, &out.tables)?;
    let manifest = RunManifest {
        scenario: scenario.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
        summary: out.summary,
    };
    output::write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}
