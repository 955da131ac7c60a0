//! Calibration and calibration-target files.
//!
//! `paritybell calibrate --targets targets.toml` fits the models to the
//! targets and writes a calibration file that `noise = "calibrated"` runs can
//! point at. Every key of a targets file is optional and defaults to the
//! reference targets:
//!
//! ```toml
//! bell_fidelity = 0.90
//! herald_success = 0.03
//! readout_diagonals = [0.900, 0.923, 0.926, 0.952]
//! readout_tolerance = 0.01
//! probe_order = ["11", "10", "00", "01"]   # searched over all 24 if absent
//! herald_dark = 0.0
//! max_rounds = 1000
//!
//! [base]               # fixed noise parameters, eps_pi is fitted
//! idle_time = 100e-6
//! ```

use paritybell_core::noise::{calibrate_noise, Calibration, CalibrationTargets, ClickModel, NoiseModel, ReadoutModel};
use serde::{Deserialize, Serialize};

use crate::config::{order_labels, parse_order};
use crate::error::{Error, Result};

/// Calibration of the reference targets, as written by `paritybell calibrate`.
pub const BUILTIN: &str = include_str!("../data/calibration.toml");

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub eps_pi: f64,
    pub eps_cond_flip: f64,
    pub t2star_c: f64,
    pub t2star_n: f64,
    pub t2star_e: f64,
    pub zz_coupling: f64,
    pub idle_time: f64,
    pub ancilla_flip_during_readout: f64,
}

impl From<&NoiseModel> for NoiseParams {
    fn from(n: &NoiseModel) -> Self {
        Self {
            eps_pi: n.eps_pi,
            eps_cond_flip: n.eps_cond_flip,
            t2star_c: n.t2star_c,
            t2star_n: n.t2star_n,
            t2star_e: n.t2star_e,
            zz_coupling: n.zz_coupling,
            idle_time: n.idle_time,
            ancilla_flip_during_readout: n.ancilla_flip_during_readout,
        }
    }
}

impl From<&NoiseParams> for NoiseModel {
    fn from(p: &NoiseParams) -> Self {
        NoiseModel {
            eps_pi: p.eps_pi,
            eps_cond_flip: p.eps_cond_flip,
            t2star_c: p.t2star_c,
            t2star_n: p.t2star_n,
            t2star_e: p.t2star_e,
            zz_coupling: p.zz_coupling,
            idle_time: p.idle_time,
            ancilla_flip_during_readout: p.ancilla_flip_during_readout,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutParams {
    pub herald_bright: f64,
    pub herald_dark: f64,
    pub probe_bright: f64,
    pub probe_dark: f64,
    pub probe_flip_error: f64,
    pub probe_order: Vec<String>,
    pub max_rounds: u32,
}

impl From<&ReadoutModel> for ReadoutParams {
    fn from(r: &ReadoutModel) -> Self {
        Self {
            herald_bright: r.click.p_click_bright,
            herald_dark: r.click.p_click_dark,
            probe_bright: r.probe_click.p_click_bright,
            probe_dark: r.probe_click.p_click_dark,
            probe_flip_error: r.probe_flip_error,
            probe_order: order_labels(&r.probe_order),
            max_rounds: r.max_rounds,
        }
    }
}

impl ReadoutParams {
    fn model(&self) -> Result<ReadoutModel> {
        let m = ReadoutModel {
            click: ClickModel { p_click_bright: self.herald_bright, p_click_dark: self.herald_dark },
            probe_click: ClickModel { p_click_bright: self.probe_bright, p_click_dark: self.probe_dark },
            probe_flip_error: self.probe_flip_error,
            probe_order: parse_order(&self.probe_order).map_err(|m| Error::field("readout.probe_order", m))?,
            max_rounds: self.max_rounds,
        };
        m.validate().map_err(|e| Error::Calibration(e.to_string()))?;
        Ok(m)
    }
}

/// Figures of merit the calibrated models reproduce.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Achieved {
    pub bell_fidelity: f64,
    pub herald_success: f64,
    pub readout_diagonals: [f64; 4],
    pub readout_max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub noise: NoiseParams,
    pub readout: ReadoutParams,
    pub achieved: Achieved,
}

impl CalibrationFile {
    pub fn from_calibration(cal: &Calibration) -> Self {
        Self {
            noise: NoiseParams::from(&cal.noise),
            readout: ReadoutParams::from(&cal.readout),
            achieved: Achieved {
                bell_fidelity: cal.bell_fidelity,
                herald_success: cal.herald_success,
                readout_diagonals: cal.readout_diagonals,
                readout_max_residual: cal.order_fits[0].max_residual,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Calibration(e.to_string()))?;
        file.models()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        let body = toml::to_string(self).expect("calibration serializes");
        format!("# paritybell calibration\n\n{body}")
    }

    pub fn models(&self) -> Result<(NoiseModel, ReadoutModel)> {
        let noise = NoiseModel::from(&self.noise);
        noise.validate().map_err(|e| Error::Calibration(e.to_string()))?;
        Ok((noise, self.readout.model()?))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargets {
    bell_fidelity: Option<f64>,
    herald_success: Option<f64>,
    readout_diagonals: Option<[f64; 4]>,
    readout_tolerance: Option<f64>,
    probe_order: Option<Vec<String>>,
    herald_dark: Option<f64>,
    max_rounds: Option<u32>,
    #[serde(default)]
    base: RawBase,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBase {
    eps_cond_flip: Option<f64>,
    t2star_c: Option<f64>,
    t2star_n: Option<f64>,
    t2star_e: Option<f64>,
    zz_coupling: Option<f64>,
    idle_time: Option<f64>,
    ancilla_flip_during_readout: Option<f64>,
}

pub fn parse_targets(text: &str) -> Result<CalibrationTargets> {
    let raw: RawTargets = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut t = CalibrationTargets::reference();
    let pick = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    pick(&mut t.bell_fidelity, raw.bell_fidelity);
    pick(&mut t.herald_success, raw.herald_success);
    pick(&mut t.readout_tolerance, raw.readout_tolerance);
    pick(&mut t.herald_dark, raw.herald_dark);
    if let Some(d) = raw.readout_diagonals {
        t.readout_diagonals = d;
    }
    if let Some(o) = raw.probe_order {
        t.probe_order = Some(parse_order(&o).map_err(|m| Error::field("probe_order", m))?);
    }
    if let Some(r) = raw.max_rounds {
        t.max_rounds = r;
    }
    let b = &mut t.base;
    pick(&mut b.eps_cond_flip, raw.base.eps_cond_flip);
    pick(&mut b.t2star_c, raw.base.t2star_c);
    pick(&mut b.t2star_n, raw.base.t2star_n);
    pick(&mut b.t2star_e, raw.base.t2star_e);
    pick(&mut b.zz_coupling, raw.base.zz_coupling);
    pick(&mut b.idle_time, raw.base.idle_time);
    pick(&mut b.ancilla_flip_during_readout, raw.base.ancilla_flip_during_readout);
    for (name, v) in [("bell_fidelity", t.bell_fidelity), ("herald_success", t.herald_success)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::field(name, format!("{v} is not a probability")));
        }
    }
    if t.readout_diagonals.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(Error::field("readout_diagonals", "entries must be probabilities"));
    }
    t.base.validate().map_err(|e| Error::field("base", e.to_string()))?;
    Ok(t)
}

/// Runs the calibration for a targets file and renders the result.
pub fn calibrate_targets(targets: &CalibrationTargets) -> Result<CalibrationFile> {
    Ok(CalibrationFile::from_calibration(&calibrate_noise(targets)?))
}
