//! Imperfection models: pulse failures, dephasing, photon-click statistics
//! and the sequential-probe nuclear readout, plus calibration against
//! measured figures of merit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_probability, Error, Result};
use crate::gates::{ancilla_x, noisy_pi_pulse, zz_phase, NuclearState, PulseSpec};
use crate::linalg::{Matrix, C64, ONE, ZERO};
use crate::math;
use crate::qstate::{GateOp, Instrument, KrausChannel, Qubit, QubitSet};

mod calibrate;

pub use calibrate::{calibrate_noise, fit_readout, Calibration, CalibrationTargets, OrderFit};

/// Outcome label of a detected photon.
pub const CLICK: &str = "click";
/// Outcome label of an empty readout window.
pub const NO_CLICK: &str = "no-click";

/// Register imperfections outside the readout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Failure probability of each ancilla reset π-pulse.
    pub eps_pi: f64,
    /// Failure probability of each state-selective ancilla flip.
    pub eps_cond_flip: f64,
    /// Seconds.
    pub t2star_c: f64,
    /// Seconds.
    pub t2star_n: f64,
    /// Seconds.
    pub t2star_e: f64,
    /// Nuclear-nuclear coupling in Hz.
    pub zz_coupling: f64,
    /// Free evolution before each parity measurement, in seconds.
    pub idle_time: f64,
    /// Probability that the ancilla flips during an optical readout.
    pub ancilla_flip_during_readout: f64,
}

impl NoiseModel {
    pub const T2STAR_C: f64 = 3.0e-3;
    pub const T2STAR_N: f64 = 11.0e-3;
    pub const T2STAR_E: f64 = 1.1e-6;

    pub fn ideal() -> Self {
        Self {
            eps_pi: 0.0,
            eps_cond_flip: 0.0,
            t2star_c: f64::INFINITY,
            t2star_n: f64::INFINITY,
            t2star_e: f64::INFINITY,
            zz_coupling: 0.0,
            idle_time: 0.0,
            ancilla_flip_during_readout: 0.0,
        }
    }

    /// Measured dephasing times, a 100 µs idle window and 1% ancilla
    /// flips per readout; the pulse errors are left at zero for calibration.
    pub fn measured() -> Self {
        Self {
            t2star_c: Self::T2STAR_C,
            t2star_n: Self::T2STAR_N,
            t2star_e: Self::T2STAR_E,
            idle_time: 100e-6,
            ancilla_flip_during_readout: 0.01,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eps_pi", self.eps_pi)?;
        check_probability("eps_cond_flip", self.eps_cond_flip)?;
        check_probability("ancilla_flip_during_readout", self.ancilla_flip_during_readout)?;
        for (name, t) in [("t2star_c", self.t2star_c), ("t2star_n", self.t2star_n), ("t2star_e", self.t2star_e)] {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::OutOfRange { name, value: t });
            }
        }
        if !(self.idle_time >= 0.0 && self.idle_time.is_finite()) {
            return Err(Error::OutOfRange { name: "idle_time", value: self.idle_time });
        }
        if !self.zz_coupling.is_finite() {
            return Err(Error::OutOfRange { name: "zz_coupling", value: self.zz_coupling });
        }
        Ok(())
    }

    /// Channels applied during the idle window: dephasing of all three spins
    /// and the accumulated nuclear ZZ phase.
    pub fn idle_channels(&self) -> Result<Vec<KrausChannel>> {
        let t = self.idle_time;
        let mut out = vec![
            dephasing_channel(Qubit::C, t, self.t2star_c)?,
            dephasing_channel(Qubit::N, t, self.t2star_n)?,
            dephasing_channel(Qubit::Ancilla, t, self.t2star_e)?,
        ];
        if self.zz_coupling != 0.0 {
            let phi = 2.0 * core::f64::consts::PI * self.zz_coupling * t;
            out.push(KrausChannel::from_gate(&zz_phase(phi)));
        }
        Ok(out)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Probability of at least one detected photon in a readout window, for the
/// bright (`|0⟩ₐ`) and dark (`|1⟩ₐ`) ancilla states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickModel {
    pub p_click_bright: f64,
    pub p_click_dark: f64,
}

impl ClickModel {
    pub fn new(p_click_bright: f64, p_click_dark: f64) -> Result<Self> {
        let m = Self { p_click_bright, p_click_dark };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self { p_click_bright: 1.0, p_click_dark: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_click_bright", self.p_click_bright)?;
        check_probability("p_click_dark", self.p_click_dark)?;
        if self.p_click_dark >= self.p_click_bright {
            return Err(Error::OutOfRange { name: "p_click_dark", value: self.p_click_dark });
        }
        Ok(())
    }

    /// Two-outcome ancilla instrument labelled [`CLICK`] / [`NO_CLICK`].
    pub fn instrument(&self) -> Instrument {
        let (b, d) = (self.p_click_bright, self.p_click_dark);
        let diag = |x: f64, y: f64| Matrix::from_real_diagonal(&[math::sqrt(x), math::sqrt(y)]);
        Instrument::new(
            vec![(CLICK.to_string(), vec![diag(b, d)]), (NO_CLICK.to_string(), vec![diag(1.0 - b, 1.0 - d)])],
            QubitSet::single(Qubit::Ancilla),
        )
        .expect("click POVM is complete")
    }
}

/// Sequential-probe single-shot readout of the nuclear pair.
///
/// Each round pumps the ancilla into `|1⟩ₐ` and then, for every state in
/// `probe_order`, applies a state-selective flip followed by a readout window.
/// The first click assigns the probed state; rounds repeat until a click.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutModel {
    /// Short readout used for heralding.
    pub click: ClickModel,
    /// Readout window after each probe flip.
    pub probe_click: ClickModel,
    pub probe_flip_error: f64,
    pub probe_order: [NuclearState; 4],
    pub max_rounds: u32,
}

impl ReadoutModel {
    pub const DEFAULT_ORDER: [NuclearState; 4] = NuclearState::ALL;

    pub fn ideal() -> Self {
        Self {
            click: ClickModel::ideal(),
            probe_click: ClickModel::ideal(),
            probe_flip_error: 0.0,
            probe_order: Self::DEFAULT_ORDER,
            max_rounds: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.click.validate()?;
        self.probe_click.validate()?;
        check_probability("probe_flip_error", self.probe_flip_error)?;
        if self.max_rounds == 0 {
            return Err(Error::OutOfRange { name: "max_rounds", value: 0.0 });
        }
        let mut seen = [false; 4];
        for s in self.probe_order {
            if core::mem::replace(&mut seen[s.index()], true) {
                return Err(Error::Precondition("probe order must be a permutation of the four states"));
            }
        }
        Ok(())
    }
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Row-stochastic assignment matrix `M[true][assigned]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionMatrix {
    rows: [[f64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn new(rows: [[f64; 4]; 4]) -> Result<Self> {
        for row in &rows {
            for &x in row {
                if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                    return Err(Error::InvalidDistribution(x));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidDistribution(sum));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity() -> Self {
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.rows
    }

    pub fn get(&self, truth: NuclearState, assigned: NuclearState) -> f64 {
        self.rows[truth.index()][assigned.index()]
    }

    pub fn diagonal(&self) -> [f64; 4] {
        core::array::from_fn(|i| self.rows[i][i])
    }

    /// Observed outcome distribution for true populations `p`.
    pub fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        core::array::from_fn(|j| (0..4).map(|i| p[i] * self.rows[i][j]).sum())
    }

    /// Inverts [`apply`](Self::apply). The result may leave the simplex for
    /// noisy input.
    pub fn unmix(&self, observed: &[f64; 4]) -> Result<[f64; 4]> {
        let mt: Vec<f64> = (0..16).map(|k| self.rows[k % 4][k / 4]).collect();
        let p = crate::linalg::solve_real(&mt, observed).ok_or(Error::Singular)?;
        Ok([p[0], p[1], p[2], p[3]])
    }

    /// Matrix of `unmix` as a linear map: `p_true[i] = Σ_j w[j][i] · observed[j]`.
    pub fn inverse(&self) -> Result<[[f64; 4]; 4]> {
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        let inv = crate::linalg::invert_real(&flat, 4).ok_or(Error::Singular)?;
        Ok(core::array::from_fn(|j| core::array::from_fn(|i| inv[j * 4 + i])))
    }
}

/// `exp(-(duration/t2star)²)`.
pub fn coherence_factor(duration: f64, t2star: f64) -> f64 {
    let r = duration / t2star;
    math::exp(-r * r)
}

/// Phase damping of one qubit that scales its coherences by
/// [`coherence_factor`].
pub fn dephasing_channel(qubit: Qubit, duration: f64, t2star: f64) -> Result<KrausChannel> {
    if t2star.is_nan() || t2star <= 0.0 {
        return Err(Error::OutOfRange { name: "t2star", value: t2star });
    }
    if duration.is_nan() || duration < 0.0 {
        return Err(Error::OutOfRange { name: "duration", value: duration });
    }
    let lambda = coherence_factor(duration, t2star);
    let targets = QubitSet::single(qubit);
    if lambda >= 1.0 {
        return Ok(KrausChannel::identity(targets));
    }
    let a = math::sqrt((1.0 + lambda) / 2.0);
    let b = math::sqrt((1.0 - lambda) / 2.0);
    KrausChannel::new(vec![Matrix::from_real_diagonal(&[a, a]), Matrix::from_real_diagonal(&[b, -b])], targets)
}

/// Optical pumping of the ancilla into `|1⟩ₐ`.
pub fn optical_pump() -> KrausChannel {
    let k0 = Matrix::from_rows(&[[ZERO, ZERO], [ONE, ZERO]]);
    let k1 = Matrix::from_rows(&[[ZERO, ZERO], [ZERO, ONE]]);
    KrausChannel::new(vec![k0, k1], QubitSet::single(Qubit::Ancilla)).expect("pump is trace preserving")
}

/// Ancilla X applied with probability `q`.
pub fn readout_flip(q: f64) -> Result<KrausChannel> {
    KrausChannel::mixture(&GateOp::identity(QubitSet::single(Qubit::Ancilla)), &ancilla_x(), q)
}

/// Noisy π-pulse on the ancilla used to reset it after a readout.
pub fn reset_pulse(eps: f64) -> Result<KrausChannel> {
    noisy_pi_pulse(&PulseSpec::AncillaFlip, eps)
}

/// Assignment probabilities for true state `truth` without normalization by
/// the clicked mass. Returns the row and the mass left unassigned.
pub(crate) fn probe_row(
    bright: f64,
    dark: f64,
    flip_error: f64,
    order: &[NuclearState; 4],
    max_rounds: u32,
    truth: NuclearState,
) -> ([f64; 4], f64) {
    let mut row = [0.0; 4];
    let mut alive = 1.0;
    for _ in 0..max_rounds {
        // ancilla populations (|0⟩, |1⟩) after pumping
        let (mut p0, mut p1) = (0.0, alive);
        for &s in order {
            if s == truth {
                (p0, p1) = (p0 * flip_error + p1 * (1.0 - flip_error), p1 * flip_error + p0 * (1.0 - flip_error));
            }
            row[s.index()] += p0 * bright + p1 * dark;
            p0 *= 1.0 - bright;
            p1 *= 1.0 - dark;
        }
        alive = p0 + p1;
        if alive < 1e-17 {
            alive = 0.0;
            break;
        }
    }
    (row, alive)
}

/// Exact branch enumeration of the sequential-probe readout for each
/// nuclear eigenstate. Runs that never click within `max_rounds` are
/// discarded and the rows renormalized.
pub fn confusion_from_readout_model(m: &ReadoutModel) -> Result<ConfusionMatrix> {
    m.validate()?;
    let mut rows = [[0.0; 4]; 4];
    for truth in NuclearState::ALL {
        let (row, _) = probe_row(
            m.probe_click.p_click_bright,
            m.probe_click.p_click_dark,
            m.probe_flip_error,
            &m.probe_order,
            m.max_rounds,
            truth,
        );
        let total: f64 = row.iter().sum();
        if total < 1e-12 {
            return Err(Error::ReadoutNotConverged(m.max_rounds));
        }
        rows[truth.index()] = row.map(|x| x / total);
    }
    ConfusionMatrix::new(rows)
}

pub(crate) fn c64(x: f64) -> C64 {
    C64::new(x, 0.0)
}
