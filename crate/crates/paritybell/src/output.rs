//! Result files.
//!
//! A run writes `result.toml` and one `<plot>.dat` per plot into the output
//! directory. `result.toml` holds the run settings, a provenance block,
//! every model parameter and every reported value with its standard error.
//! Nothing time-dependent is written, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::calibration::{NoiseParams, ReadoutParams};
use crate::config::{ExperimentConfig, NoiseSource};
use crate::error::{Error, Result};
use crate::experiments::{Models, Plot, Report};

pub const RESULT_FILE: &str = "result.toml";

#[derive(Serialize)]
struct ResultFile<'a> {
    experiment: &'a str,
    description: &'a str,
    bell: &'a str,
    mode: &'a str,
    shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    notes: &'a [String],
    provenance: Provenance,
    model: Model,
    values: Vec<Labelled<'a>>,
    plots: Vec<PlotRef<'a>>,
}

#[derive(Serialize)]
struct Provenance {
    version: &'static str,
    config_sha256: String,
    noise: String,
    calibration_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Model {
    probe_order: Vec<String>,
    max_rounds: u32,
    parameters: Vec<Labelled<'static>>,
}

#[derive(Serialize)]
struct Labelled<'a> {
    name: &'a str,
    value: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct PlotRef<'a> {
    name: &'a str,
    file: String,
    description: &'a str,
    columns: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parameters(models: &Models) -> Model {
    let n = NoiseParams::from(&models.noise);
    let r = ReadoutParams::from(&models.readout);
    let p = |name: &'static str, value: f64| Labelled { name, value, stderr: 0.0 };
    Model {
        probe_order: r.probe_order.clone(),
        max_rounds: r.max_rounds,
        parameters: vec![
            p("eps_pi", n.eps_pi),
            p("eps_cond_flip", n.eps_cond_flip),
            p("t2star_c", n.t2star_c),
            p("t2star_n", n.t2star_n),
            p("t2star_e", n.t2star_e),
            p("zz_coupling", n.zz_coupling),
            p("idle_time", n.idle_time),
            p("ancilla_flip_during_readout", n.ancilla_flip_during_readout),
            p("herald_bright", r.herald_bright),
            p("herald_dark", r.herald_dark),
            p("probe_bright", r.probe_bright),
            p("probe_dark", r.probe_dark),
            p("probe_flip_error", r.probe_flip_error),
        ],
    }
}

/// Renders `result.toml`. `calibration` is the text of the calibration file
/// used, if any.
pub fn render_result(
    cfg: &ExperimentConfig,
    config_text: &str,
    calibration: Option<&str>,
    models: &Models,
    report: &Report,
) -> String {
    let noise = match &cfg.noise {
        NoiseSource::Ideal => "ideal".to_string(),
        NoiseSource::Calibrated(None) => "calibrated (builtin)".to_string(),
        NoiseSource::Calibrated(Some(p)) => {
            format!("calibrated ({})", p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
        }
    };
    let file = ResultFile {
        experiment: cfg.experiment.name(),
        description: cfg.experiment.description(),
        bell: cfg.bell.name(),
        mode: cfg.mode_name(),
        shots: cfg.shots,
        points: cfg.experiment.is_sweep().then_some(cfg.points),
        notes: &report.notes,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(config_text.as_bytes()),
            noise,
            calibration_sha256: calibration.map_or_else(|| "none".to_string(), |c| sha256_hex(c.as_bytes())),
            seed: cfg.seed,
        },
        model: parameters(models),
        values: report.values.iter().map(|v| Labelled { name: &v.name, value: v.value, stderr: v.stderr }).collect(),
        plots: report
            .plots
            .iter()
            .map(|p| PlotRef {
                name: &p.name,
                file: format!("{}.dat", p.name),
                description: &p.description,
                columns: "x y y_err",
            })
            .collect(),
    };
    let body = toml::to_string(&file).expect("result serializes");
    format!("# paritybell {} result\n\n{body}", cfg.experiment.name())
}

pub fn render_plot(plot: &Plot) -> String {
    let mut out = format!("# x y y_err\n# {}\n", plot.description);
    for [x, y, e] in &plot.rows {
        writeln!(out, "{x} {y} {e}").unwrap();
    }
    out
}

/// Writes the result and plot files, returning their paths in write order.
pub fn write(
    cfg: &ExperimentConfig,
    config_text: &str,
    calibration: Option<&str>,
    models: &Models,
    report: &Report,
) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: String| -> Result<()> {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put(dir.join(RESULT_FILE), render_result(cfg, config_text, calibration, models, report))?;
    for plot in &report.plots {
        put(dir.join(format!("{}.dat", plot.name)), render_plot(plot))?;
    }
    Ok(written)
}

/// Parses a `.dat` file back into rows.
pub fn read_plot(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| Error::Config(format!("{}: {e}", path.display())))?;
            <[f64; 3]>::try_from(cols).map_err(|_| Error::Config(format!("{}: expected 3 columns", path.display())))
        })
        .collect()
}
