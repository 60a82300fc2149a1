//! Batch runner for the vibfilter experiments: reads a TOML config, runs one
//! named experiment and writes CSV tables with a provenance header.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::RunConfig;
pub use error::{CliError, ConfigError};
pub use experiments::{run_experiment, Artifact, Experiment};

pub const DEFAULT_OUT_DIR: &str = "out";

/// Loads the config, applies command-line overrides, runs the experiment and
/// writes its files. Returns the written paths.
pub fn execute(
    experiment: Experiment,
    config_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
        cfg.validate()?;
    }
    let dir = out.or_else(|| cfg.run.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let artifacts = run_experiment(experiment, &cfg)?;
    write_artifacts(experiment, &cfg, &artifacts, &dir)
}

pub fn write_artifacts(
    experiment: Experiment,
    cfg: &RunConfig,
    artifacts: &[Artifact],
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_owned(), source })?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(a.file_name());
            std::fs::write(&path, a.render(experiment, cfg))
                .map_err(|source| CliError::Write { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}
