use alloc::vec::Vec;

use super::{probe_row, ClickModel, NoiseModel, ReadoutModel};
use crate::error::{Error, Result};
use crate::gates::NuclearState;
use crate::optimize::{bisect, least_squares_box};
use crate::protocol::{prepare_bell, BellLabel};
use crate::qstate::fidelity;

/// Figures of merit the calibrated models must reproduce, plus the fixed
/// parameters that are not fitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationTargets {
    /// Fidelity of the prepared Φ+ state.
    pub bell_fidelity: f64,
    /// Probability of the parity herald during Φ+ preparation.
    pub herald_success: f64,
    /// Readout assignment fidelities of `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub readout_diagonals: [f64; 4],
    /// Largest accepted deviation of a fitted readout diagonal.
    pub readout_tolerance: f64,
    /// Probe order to fit; `None` searches all 24 and keeps the best.
    pub probe_order: Option<[NuclearState; 4]>,
    /// Dephasing, idle window, ZZ coupling, post-readout flips and
    /// conditional-flip errors are taken from here; `eps_pi` is fitted.
    pub base: NoiseModel,
    pub herald_dark: f64,
    pub max_rounds: u32,
}

impl CalibrationTargets {
    /// F = 0.90, 3% parity herald, readout diagonals (0.900, 0.923, 0.926, 0.952).
    pub fn reference() -> Self {
        Self {
            bell_fidelity: 0.90,
            herald_success: 0.03,
            readout_diagonals: [0.900, 0.923, 0.926, 0.952],
            readout_tolerance: 0.01,
            probe_order: None,
            base: NoiseModel::measured(),
            herald_dark: 0.0,
            max_rounds: 1000,
        }
    }
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self::reference()
    }
}

/// Best readout fit for one probe order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub order: [NuclearState; 4],
    pub probe_click: ClickModel,
    pub probe_flip_error: f64,
    pub diagonals: [f64; 4],
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub noise: NoiseModel,
    pub readout: ReadoutModel,
    /// Values reproduced by the calibrated models.
    pub bell_fidelity: f64,
    pub herald_success: f64,
    pub readout_diagonals: [f64; 4],
    /// Every probe order tried, best first.
    pub order_fits: Vec<OrderFit>,
}

impl Calibration {
    /// Targets that this calibration reproduces exactly.
    pub fn achieved_targets(&self, base: &CalibrationTargets) -> CalibrationTargets {
        CalibrationTargets {
            bell_fidelity: self.bell_fidelity,
            herald_success: self.herald_success,
            readout_diagonals: self.readout_diagonals,
            ..*base
        }
    }
}

fn all_orders() -> Vec<[NuclearState; 4]> {
    let mut out = Vec::with_capacity(24);
    let s = NuclearState::ALL;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let idx = [a, b, c, d];
                    let mut seen = [false; 4];
                    if idx.iter().all(|&i| !core::mem::replace(&mut seen[i], true)) {
                        out.push(idx.map(|i| s[i]));
                    }
                }
            }
        }
    }
    out
}

fn diagonals(bright: f64, dark: f64, flip: f64, order: &[NuclearState; 4], max_rounds: u32) -> [f64; 4] {
    core::array::from_fn(|t| {
        let truth = NuclearState::ALL[t];
        let (row, _) = probe_row(bright, dark, flip, order, max_rounds, truth);
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row[t] / total
        } else {
            0.0
        }
    })
}

/// Least-squares fit of the probe click model and flip error to the four
/// readout diagonals for a fixed probe order.
pub fn fit_readout(targets: &[f64; 4], order: [NuclearState; 4], max_rounds: u32) -> Result<OrderFit> {
    const LO: [f64; 3] = [0.01, 0.0, 0.0];
    const HI: [f64; 3] = [1.0, 0.5, 0.5];
    const STARTS: [[f64; 3]; 4] = [[0.9, 0.01, 0.05], [0.95, 0.02, 0.1], [0.8, 0.005, 0.02], [0.99, 0.03, 0.0]];
    let residuals = |x: &[f64]| -> Result<Vec<f64>, Error> {
        let dark = x[1].min(x[0] * 0.999);
        let d = diagonals(x[0], dark, x[2], &order, max_rounds);
        Ok(d.iter().zip(targets).map(|(a, b)| a - b).collect())
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x0 in STARTS {
        let fit = least_squares_box(residuals, &x0, &LO, &HI)?;
        let cost = fit.cost();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, fit.x));
        }
    }
    let (_, x) = best.expect("at least one start");
    let probe_click = ClickModel::new(x[0], x[1].min(x[0] * 0.999))?;
    let d = diagonals(probe_click.p_click_bright, probe_click.p_click_dark, x[2], &order, max_rounds);
    let max_residual = d.iter().zip(targets).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(OrderFit { order, probe_click, probe_flip_error: x[2], diagonals: d, max_residual })
}

fn phi_plus(noise: &NoiseModel, readout: &ReadoutModel) -> Result<(f64, f64)> {
    let r = prepare_bell(BellLabel::PhiPlus, noise, readout)?;
    let success = r.herald("parity-even").map(|h| h.probability).unwrap_or(0.0);
    Ok((fidelity(&r.final_state, &BellLabel::PhiPlus.vector())?, success))
}

/// Fits the readout model to the readout diagonals, the herald bright-click
/// probability to the parity-herald success and `eps_pi` to the Bell
/// fidelity. The last two are alternated until both are stable.
pub fn calibrate_noise(targets: &CalibrationTargets) -> Result<Calibration> {
    targets.base.validate()?;
    let orders = match targets.probe_order {
        Some(o) => alloc::vec![o],
        None => all_orders(),
    };
    let mut order_fits = orders
        .into_iter()
        .map(|o| fit_readout(&targets.readout_diagonals, o, targets.max_rounds))
        .collect::<Result<Vec<_>>>()?;
    order_fits.sort_by(|a, b| a.max_residual.total_cmp(&b.max_residual));
    let best = order_fits[0];
    if best.max_residual > targets.readout_tolerance {
        return Err(Error::UnreachableTarget("readout_diagonals"));
    }

    let mut noise = targets.base;
    let mut readout = ReadoutModel {
        click: ClickModel::new(0.5_f64.max(targets.herald_dark + 1e-3), targets.herald_dark)?,
        probe_click: best.probe_click,
        probe_flip_error: best.probe_flip_error,
        probe_order: best.order,
        max_rounds: targets.max_rounds,
    };
    readout.validate()?;

    let mut last = (f64::NAN, f64::NAN);
    for _ in 0..50 {
        let lo = targets.herald_dark + 1e-6;
        let bright = bisect(
            |b| {
                let r = ReadoutModel {
                    click: ClickModel { p_click_bright: b, p_click_dark: targets.herald_dark },
                    ..readout
                };
                Ok::<_, Error>(phi_plus(&noise, &r)?.1 - targets.herald_success)
            },
            lo,
            1.0,
        )?
        .ok_or(Error::UnreachableTarget("herald_success"))?;
        readout.click = ClickModel::new(bright, targets.herald_dark)?;

        let (f0, _) = phi_plus(&NoiseModel { eps_pi: 0.0, ..noise }, &readout)?;
        noise.eps_pi = if (f0 - targets.bell_fidelity).abs() <= 1e-12 {
            0.0
        } else {
            bisect(
                |e| Ok::<_, Error>(phi_plus(&NoiseModel { eps_pi: e, ..noise }, &readout)?.0 - targets.bell_fidelity),
                0.0,
                1.0,
            )?
            .ok_or(Error::UnreachableTarget("bell_fidelity"))?
        };
        let now = (bright, noise.eps_pi);
        if (now.0 - last.0).abs() < 1e-13 && (now.1 - last.1).abs() < 1e-13 {
            break;
        }
        last = now;
    }

    let (bell_fidelity, herald_success) = phi_plus(&noise, &readout)?;
    Ok(Calibration { noise, readout, bell_fidelity, herald_success, readout_diagonals: best.diagonals, order_fits })
}
