//! Experiment runner for the `paritybell-core` simulator: run configs,
//! calibration files, result and plot-data output, and the `paritybell` CLI.

pub mod calibration;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiments::{execute, Experiment, Models, Report};

use calibration::{CalibrationFile, BUILTIN};
use config::{validate_models, NoiseSource};

/// Models for a config and the calibration text they came from.
pub fn resolve_models(cfg: &ExperimentConfig) -> Result<(Models, Option<String>)> {
    let (mut models, text) = match &cfg.noise {
        NoiseSource::Ideal => (Models::ideal(), None),
        NoiseSource::Calibrated(path) => {
            let text = match path {
                None => BUILTIN.to_string(),
                Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            };
            let (noise, readout) = CalibrationFile::parse(&text)?.models()?;
            (Models { noise, readout }, Some(text))
        }
    };
    cfg.overrides.apply(&mut models.noise, &mut models.readout)?;
    validate_models(&models.noise, &models.readout)?;
    Ok((models, text))
}

pub struct Run {
    pub config: ExperimentConfig,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Loads a config, runs its experiment and writes the output files.
pub fn run_config(path: &Path) -> Result<Run> {
    let (config, text) = ExperimentConfig::load(path)?;
    let (models, calibration) = resolve_models(&config)?;
    let report = execute(&config, &models)?;
    let files = output::write(&config, &text, calibration.as_deref(), &models, &report)?;
    Ok(Run { config, report, files })
}
