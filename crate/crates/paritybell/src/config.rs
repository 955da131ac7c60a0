//! Run configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! experiment = "chsh"          # see `paritybell list`
//! bell = "phi-"                # phi+ | phi- | psi+ | psi-
//! mode = "montecarlo"          # exact | montecarlo
//! shots = 300                  # per setting or point; experiment default if absent
//! seed = 7                     # required in montecarlo mode
//! output_dir = "out/chsh"      # relative to the config file
//! noise = "calibrated"         # ideal | calibrated
//! calibration = "cal.toml"     # optional, builtin calibration if absent
//! points = 25                  # sweep points, experiment default if absent
//!
//! [overrides]                  # optional model parameters, applied last
//! eps_pi = 0.08
//! probe_order = ["11", "10", "00", "01"]
//! ```

use std::path::{Path, PathBuf};

use paritybell_core::gates::NuclearState;
use paritybell_core::noise::{ClickModel, NoiseModel, ReadoutModel};
use paritybell_core::protocol::{BellLabel, Mode};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::Experiment;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    bell: Option<String>,
    mode: Option<String>,
    shots: Option<u64>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    noise: Option<String>,
    calibration: Option<PathBuf>,
    points: Option<usize>,
    #[serde(default)]
    overrides: Overrides,
}

/// Model parameters that replace the calibrated or ideal values.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub eps_pi: Option<f64>,
    pub eps_cond_flip: Option<f64>,
    pub t2star_c: Option<f64>,
    pub t2star_n: Option<f64>,
    pub t2star_e: Option<f64>,
    pub zz_coupling: Option<f64>,
    pub idle_time: Option<f64>,
    pub ancilla_flip_during_readout: Option<f64>,
    pub herald_bright: Option<f64>,
    pub herald_dark: Option<f64>,
    pub probe_bright: Option<f64>,
    pub probe_dark: Option<f64>,
    pub probe_flip_error: Option<f64>,
    pub probe_order: Option<Vec<String>>,
    pub max_rounds: Option<u32>,
}

impl Overrides {
    pub fn apply(&self, noise: &mut NoiseModel, readout: &mut ReadoutModel) -> Result<()> {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut noise.eps_pi, self.eps_pi);
        set(&mut noise.eps_cond_flip, self.eps_cond_flip);
        set(&mut noise.t2star_c, self.t2star_c);
        set(&mut noise.t2star_n, self.t2star_n);
        set(&mut noise.t2star_e, self.t2star_e);
        set(&mut noise.zz_coupling, self.zz_coupling);
        set(&mut noise.idle_time, self.idle_time);
        set(&mut noise.ancilla_flip_during_readout, self.ancilla_flip_during_readout);
        set(&mut readout.click.p_click_bright, self.herald_bright);
        set(&mut readout.click.p_click_dark, self.herald_dark);
        set(&mut readout.probe_click.p_click_bright, self.probe_bright);
        set(&mut readout.probe_click.p_click_dark, self.probe_dark);
        set(&mut readout.probe_flip_error, self.probe_flip_error);
        if let Some(order) = &self.probe_order {
            readout.probe_order = parse_order(order).map_err(|msg| Error::field("overrides.probe_order", msg))?;
        }
        if let Some(r) = self.max_rounds {
            readout.max_rounds = r;
        }
        Ok(())
    }
}

pub fn parse_order(items: &[String]) -> std::result::Result<[NuclearState; 4], String> {
    if items.len() != 4 {
        return Err(format!("expected 4 states, got {}", items.len()));
    }
    let mut out = [NuclearState::S00; 4];
    for (slot, s) in out.iter_mut().zip(items) {
        *slot = NuclearState::parse(s).ok_or_else(|| format!("unknown state {s:?}, expected one of 00, 01, 10, 11"))?;
    }
    let mut seen = [false; 4];
    if out.iter().any(|s| std::mem::replace(&mut seen[s.index()], true)) {
        return Err("states must all differ".into());
    }
    Ok(out)
}

pub fn order_labels(order: &[NuclearState; 4]) -> Vec<String> {
    order.iter().map(|s| s.label().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSource {
    Ideal,
    /// Builtin calibration when `None`.
    Calibrated(Option<PathBuf>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub bell: BellLabel,
    pub mode: Mode,
    /// Shots per setting or point; also recorded in exact mode.
    pub shots: u64,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub noise: NoiseSource,
    pub points: usize,
    pub overrides: Overrides,
}

impl ExperimentConfig {
    /// Defaults of `experiment` in exact mode with ideal models.
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            bell: experiment.default_bell(),
            mode: Mode::Exact,
            shots: experiment.default_shots(experiment.default_bell()),
            seed: None,
            output_dir: PathBuf::from("out").join(experiment.name()),
            noise: NoiseSource::Ideal,
            points: experiment.default_points(),
            overrides: Overrides::default(),
        }
    }

    /// Parses a config. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let experiment = Experiment::parse(&raw.experiment).ok_or_else(|| {
            Error::field(
                "experiment",
                format!("unknown experiment {:?}; `paritybell list` shows the names", raw.experiment),
            )
        })?;
        let mut cfg = Self::defaults(experiment);
        if let Some(b) = raw.bell {
            cfg.bell = BellLabel::parse(&b).ok_or_else(|| {
                Error::field("bell", format!("unknown Bell state {b:?}, expected phi+, phi-, psi+ or psi-"))
            })?;
        }
        cfg.shots = experiment.default_shots(cfg.bell);
        if let Some(shots) = raw.shots {
            if shots == 0 {
                return Err(Error::field("shots", "must be at least 1"));
            }
            cfg.shots = shots;
        }
        cfg.seed = raw.seed;
        cfg.mode = match raw.mode.as_deref().unwrap_or("exact") {
            "exact" => Mode::Exact,
            "montecarlo" => Mode::MonteCarlo {
                shots: cfg.shots,
                seed: raw.seed.ok_or_else(|| Error::field("seed", "required in montecarlo mode"))?,
            },
            other => return Err(Error::field("mode", format!("unknown mode {other:?}, expected exact or montecarlo"))),
        };
        if let Some(dir) = raw.output_dir {
            cfg.output_dir = dir;
        }
        cfg.output_dir = base_dir.join(&cfg.output_dir);
        cfg.noise = match raw.noise.as_deref().unwrap_or("ideal") {
            "ideal" => {
                if raw.calibration.is_some() {
                    return Err(Error::field("calibration", "only used with noise = \"calibrated\""));
                }
                NoiseSource::Ideal
            }
            "calibrated" => NoiseSource::Calibrated(raw.calibration.map(|p| base_dir.join(p))),
            other => {
                return Err(Error::field("noise", format!("unknown noise {other:?}, expected ideal or calibrated")))
            }
        };
        if let Some(points) = raw.points {
            if points < 4 {
                return Err(Error::field("points", "sweeps need at least 4 points"));
            }
            cfg.points = points;
        }
        cfg.overrides = raw.overrides;
        if let Some(order) = &cfg.overrides.probe_order {
            parse_order(order).map_err(|msg| Error::field("overrides.probe_order", msg))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::parse(&text, base)?, text))
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Exact => "exact",
            Mode::MonteCarlo { .. } => "montecarlo",
        }
    }
}

/// Checks every model parameter, naming the offending one.
pub fn validate_models(noise: &NoiseModel, readout: &ReadoutModel) -> Result<()> {
    noise.validate().map_err(|e| Error::field("noise model", e.to_string()))?;
    readout.validate().map_err(|e| Error::field("readout model", e.to_string()))?;
    Ok(())
}

pub fn herald_click(bright: f64, dark: f64) -> Result<ClickModel> {
    ClickModel::new(bright, dark).map_err(|e| Error::field("herald click model", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("experiment = \"bell-prep\"", Path::new("/tmp")).unwrap();
        assert_eq!(cfg.mode, Mode::Exact);
        assert_eq!(cfg.bell, BellLabel::PhiPlus);
        assert_eq!(cfg.noise, NoiseSource::Ideal);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/out/bell-prep"));
    }

    #[test]
    fn montecarlo_needs_a_seed() {
        let err = ExperimentConfig::parse("experiment = \"chsh\"\nmode = \"montecarlo\"", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_are_reported_with_line() {
        let err = ExperimentConfig::parse("experiment = \"chsh\"\n\nshotz = 3\n", Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("shotz"), "{msg}");
    }

    #[test]
    fn bad_values_name_the_field() {
        for (text, field) in [
            ("experiment = \"tomo\"", "experiment"),
            ("experiment = \"chsh\"\nbell = \"phi\"", "bell"),
            ("experiment = \"chsh\"\nshots = 0", "shots"),
            ("experiment = \"chsh\"\nnoise = \"loud\"", "noise"),
            ("experiment = \"chsh\"\n[overrides]\nprobe_order = [\"00\", \"00\", \"10\", \"11\"]", "probe_order"),
        ] {
            let msg = ExperimentConfig::parse(text, Path::new(".")).unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        }
    }

    #[test]
    fn overrides_replace_model_values() {
        let cfg = ExperimentConfig::parse(
            "experiment = \"chsh\"\n[overrides]\neps_pi = 0.2\nprobe_order = [\"11\", \"10\", \"00\", \"01\"]\n",
            Path::new("."),
        )
        .unwrap();
        let (mut n, mut r) = (NoiseModel::ideal(), ReadoutModel::ideal());
        cfg.overrides.apply(&mut n, &mut r).unwrap();
        assert_eq!(n.eps_pi, 0.2);
        assert_eq!(r.probe_order[0], NuclearState::S11);
    }
}
