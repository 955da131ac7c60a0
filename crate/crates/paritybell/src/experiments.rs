//! The eight experiments a config can name.

use std::f64::consts::PI;

use paritybell_core::gates::{rf_rotation, NuclearState, RotationSpec};
use paritybell_core::noise::{confusion_from_readout_model, NoiseModel, ReadoutModel};
use paritybell_core::protocol::{
    basis_sweep, bell_discriminate, chsh_distribution, chsh_experiment, initialize_by_measurement, measure_in_bases,
    prepare_bell, prepare_superposition, rabi_sweep, sample_counts, sample_index, substream, BellLabel, ChshAngles,
    ChshAssignment, Discrimination, MeasurementBasis, Mode, Parity, ProtocolResult,
};
use paritybell_core::qstate::{embed, fidelity, QubitSet};
use paritybell_core::tomo::{
    sinusoid_fit, tomography, visibility_fidelity_bound, Estimate, SinusoidFit, TomographyMethod,
};
use paritybell_core::{Qubit, C64};

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    InitTomo,
    SuperposTomo,
    BellPrep,
    BasisSweep,
    BellDiscriminate,
    ReadoutCalib,
    Chsh,
    Rabi,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::InitTomo,
        Self::SuperposTomo,
        Self::BellPrep,
        Self::BasisSweep,
        Self::BellDiscriminate,
        Self::ReadoutCalib,
        Self::Chsh,
        Self::Rabi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::InitTomo => "init-tomo",
            Self::SuperposTomo => "superpos-tomo",
            Self::BellPrep => "bell-prep",
            Self::BasisSweep => "basis-sweep",
            Self::BellDiscriminate => "bell-discriminate",
            Self::ReadoutCalib => "readout-calib",
            Self::Chsh => "chsh",
            Self::Rabi => "rabi",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::InitTomo => "tomography of the nuclear pair after initialization by measurement",
            Self::SuperposTomo => "tomography of the product superposition before the parity measurement",
            Self::BellPrep => "tomography of the Bell state heralded by the parity measurement",
            Self::BasisSweep => "parity and C marginal with C measured along pi + alpha and N along -X",
            Self::BellDiscriminate => "odd parity in Z, then parity in the -X basis to tell psi+ from psi-",
            Self::ReadoutCalib => "assignment matrix of the sequential-probe readout",
            Self::Chsh => "CHSH correlations and S for a prepared Bell state",
            Self::Rabi => "RF rotations of C and N about X after initialization",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn default_bell(self) -> BellLabel {
        match self {
            Self::BellDiscriminate => BellLabel::PsiPlus,
            Self::Chsh => BellLabel::PhiMinus,
            _ => BellLabel::PhiPlus,
        }
    }

    pub fn default_shots(self, bell: BellLabel) -> u64 {
        match self {
            Self::BasisSweep | Self::BellDiscriminate => 240,
            Self::Chsh => match bell {
                BellLabel::PhiPlus | BellLabel::PhiMinus => 300,
                BellLabel::PsiPlus | BellLabel::PsiMinus => 500,
            },
            Self::Rabi => 1000,
            Self::InitTomo | Self::SuperposTomo | Self::BellPrep | Self::ReadoutCalib => 500,
        }
    }

    pub fn default_points(self) -> usize {
        match self {
            Self::Rabi => 41,
            _ => 25,
        }
    }

    /// Whether `points` is used.
    pub fn is_sweep(self) -> bool {
        matches!(self, Self::BasisSweep | Self::Rabi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Value {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

/// Rows of `(x, y, y_err)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub name: String,
    pub description: String,
    pub rows: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub values: Vec<Value>,
    pub plots: Vec<Plot>,
    pub notes: Vec<String>,
}

impl Report {
    fn value(&mut self, name: impl Into<String>, e: Estimate) {
        self.values.push(Value { name: name.into(), value: e.value, stderr: e.stderr });
    }

    fn exact(&mut self, name: impl Into<String>, value: f64) {
        self.value(name, Estimate::exact(value));
    }

    fn plot(&mut self, name: &str, description: &str, rows: Vec<[f64; 3]>) {
        self.plots.push(Plot { name: name.into(), description: description.into(), rows });
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|v| v.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Models {
    pub noise: NoiseModel,
    pub readout: ReadoutModel,
}

impl Models {
    pub fn ideal() -> Self {
        Self { noise: NoiseModel::ideal(), readout: ReadoutModel::ideal() }
    }
}

pub fn execute(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    match cfg.experiment {
        Experiment::InitTomo => {
            let init = initialize_by_measurement(&models.noise, &models.readout)?;
            let target = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
            state_tomography(cfg, models, &init, &target)
        }
        Experiment::SuperposTomo => {
            let sup = prepare_superposition(cfg.bell, &models.noise, &models.readout)?;
            state_tomography(cfg, models, &sup, &superposition_target(cfg.bell)?)
        }
        Experiment::BellPrep => {
            let prepared = prepare_bell(cfg.bell, &models.noise, &models.readout)?;
            state_tomography(cfg, models, &prepared, &cfg.bell.vector())
        }
        Experiment::BasisSweep => sweep(cfg, models),
        Experiment::BellDiscriminate => discriminate(cfg, models),
        Experiment::ReadoutCalib => readout_calib(cfg, models),
        Experiment::Chsh => chsh(cfg, models),
        Experiment::Rabi => rabi(cfg, models),
    }
}

fn heralds(report: &mut Report, prepared: &ProtocolResult) {
    for h in &prepared.heralds {
        report.exact(format!("herald_{}", h.label.replace('-', "_")), h.probability);
    }
    report.exact("success_probability", prepared.success_probability);
}

/// `|00⟩` after the ideal π/2 pulses of `which`.
fn superposition_target(which: BellLabel) -> Result<[C64; 4]> {
    let (ac, an) = which.pulse_axes();
    let mut psi = vec![C64::new(0.0, 0.0); 4];
    psi[0] = C64::new(1.0, 0.0);
    for (q, axis) in [(Qubit::C, ac), (Qubit::N, an)] {
        let gate = rf_rotation(&RotationSpec::new(q, axis, PI / 2.0))?;
        psi = embed(gate.unitary(), gate.targets(), QubitSet::NUCLEAR)?.apply(&psi);
    }
    Ok([psi[0], psi[1], psi[2], psi[3]])
}

fn state_tomography(
    cfg: &ExperimentConfig,
    models: &Models,
    prepared: &ProtocolResult,
    target: &[C64; 4],
) -> Result<Report> {
    let state = &prepared.final_state;
    let t = tomography(state, target, &models.readout, true, TomographyMethod::PhysicalProjection, cfg.mode)?;
    let mut r = Report::default();
    r.value("fidelity", t.fidelity_vs_target);
    r.value("fidelity_linear", t.fidelity_linear);
    r.exact("fidelity_true", fidelity(state, target)?);
    r.exact("min_eigenvalue_linear", t.rho_linear.min_eigenvalue());
    heralds(&mut r, prepared);
    let mut re = Vec::new();
    let mut im = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let x = (4 * i + j) as f64;
            let v = t.rho_est.get(i, j);
            re.push([x, v.re, t.stderr_real[i][j]]);
            im.push([x, v.im, t.stderr_imag[i][j]]);
        }
    }
    r.plot("rho_real", "real part of the reconstructed density matrix, x = 4 i + j", re);
    r.plot("rho_imag", "imaginary part of the reconstructed density matrix, x = 4 i + j", im);
    r.notes.push("readout mitigated with the inverse confusion matrix; estimate projected onto physical states".into());
    r.notes.push("errors are counting errors of the linear estimate".into());
    Ok(r)
}

fn seed_of(mode: Mode) -> Option<(u64, u64)> {
    match mode {
        Mode::Exact => None,
        Mode::MonteCarlo { shots, seed } => Some((shots, seed)),
    }
}

/// Number of successes in `n` draws with probability `p`.
fn binomial(p: f64, n: u64, seed: u64, stream: u64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    let mut rng = substream(seed, stream);
    (0..n).filter(|_| sample_index(&[1.0 - p, p], &mut rng) == 1).count() as u64
}

/// Laplace-smoothed binomial error, never zero.
fn fit_error(k: u64, n: u64) -> f64 {
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Probability per point: exact value, or a sampled proportion with errors
/// for the fit. `stream` numbers the points.
fn measured(ps: &[f64], mode: Mode, stream0: u64) -> (Vec<Estimate>, Vec<f64>) {
    match seed_of(mode) {
        None => (ps.iter().map(|&p| Estimate::exact(p)).collect(), vec![0.0; ps.len()]),
        Some((n, seed)) => ps
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let hits = binomial(p, n, seed, stream0 + k as u64);
                (Estimate::proportion(hits, n), fit_error(hits, n))
            })
            .unzip(),
    }
}

fn grid(points: usize, span: f64, closed: bool) -> Vec<f64> {
    let steps = if closed { points - 1 } else { points };
    (0..points).map(|k| span * k as f64 / steps as f64).collect()
}

fn curve(fit: &SinusoidFit, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    (0..=200)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / 200.0;
            [x, fit.offset.value + fit.cos_coeff.value * x.cos() + fit.sin_coeff.value * x.sin(), 0.0]
        })
        .collect()
}

fn rows(xs: &[f64], ys: &[Estimate]) -> Vec<[f64; 3]> {
    xs.iter().zip(ys).map(|(&x, e)| [x, e.value, e.stderr]).collect()
}

fn sweep(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    let prepared = prepare_bell(cfg.bell, &models.noise, &models.readout)?;
    let state = &prepared.final_state;
    let alphas = grid(cfg.points, 2.0 * PI, false);
    let points = basis_sweep(state, &alphas, MeasurementBasis::MINUS_X, None)?;
    let n = alphas.len() as u64;
    let (p_even, even_err) = measured(&points.iter().map(|p| p.p_even).collect::<Vec<_>>(), cfg.mode, 0);
    let (p_c0, _) = measured(&points.iter().map(|p| p.p_c0).collect::<Vec<_>>(), cfg.mode, n);
    let fit = sinusoid_fit(&alphas, &p_even.iter().map(|e| e.value).collect::<Vec<_>>(), &even_err)?;

    let ideal = basis_sweep(&cfg.bell.density_matrix(), &[0.0, PI], MeasurementBasis::MINUS_X, None)?;
    let sign = if ideal[0].p_even >= ideal[1].p_even { 1.0 } else { -1.0 };
    let visibility = Estimate::new(sign * 2.0 * fit.cos_coeff.value, 2.0 * fit.cos_coeff.stderr);

    let mut r = Report::default();
    r.value("visibility", visibility);
    r.value("amplitude", fit.amplitude);
    r.value("phase", fit.phase);
    r.value("offset", fit.offset);
    r.exact("chi2", fit.chi2);
    let mean_c0 = p_c0.iter().map(|e| e.value).sum::<f64>() / p_c0.len() as f64;
    let var_c0 = p_c0.iter().map(|e| e.stderr * e.stderr).sum::<f64>() / (p_c0.len() * p_c0.len()) as f64;
    r.value("p_c0_mean", Estimate::new(mean_c0, var_c0.sqrt()));
    r.exact("p_c0_max_deviation", p_c0.iter().map(|e| (e.value - mean_c0).abs()).fold(0.0, f64::max));

    if cfg.bell.parity() == Parity::Odd {
        let z = measure_in_bases(state, MeasurementBasis::Z, MeasurementBasis::Z, None)?;
        let (pop, _) = measured(&[z[1] + z[2]], cfg.mode, 2 * n);
        let pop_odd = pop[0];
        let v = visibility.value.clamp(0.0, 1.0);
        let bound = visibility_fidelity_bound(pop_odd.value.clamp(0.0, 1.0), v)?;
        let err = (pop_odd.stderr.powi(2) + visibility.stderr.powi(2) / 4.0).sqrt();
        r.value("pop_odd", pop_odd);
        r.value("fidelity_bound", Estimate::new(bound, err));
        r.exact("fidelity_true", fidelity(state, &cfg.bell.vector())?);
    }
    heralds(&mut r, &prepared);
    r.plot("p_even", "P(even) against alpha", rows(&alphas, &p_even));
    r.plot("p_c0", "P_C(0) against alpha", rows(&alphas, &p_c0));
    r.plot("fit", "fitted P(even)", curve(&fit, 0.0, 2.0 * PI));
    r.notes.push("probabilities are readout-corrected".into());
    r.notes.push("visibility is P(even) at alpha = 0 minus alpha = pi, signed so the ideal state gives +1".into());
    Ok(r)
}

fn discriminate(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    let prepared = prepare_bell(cfg.bell, &models.noise, &models.readout)?;
    let d = bell_discriminate(&prepared.final_state, &models.noise, &models.readout)?;
    let (z, rot) = match seed_of(cfg.mode) {
        None => (Estimate::exact(d.p_odd_z), Estimate::exact(d.p_even_rotated)),
        Some((n, seed)) => {
            let total = d.p_even_rotated + d.p_odd_rotated;
            let z = binomial(d.p_odd_z, n, seed, 0);
            let rot = binomial(d.p_even_rotated / total, n, seed, 1);
            (Estimate::proportion(z, n), Estimate::proportion(rot, n))
        }
    };
    let odd_rot = Estimate::new(1.0 - rot.value, rot.stderr);
    let sampled = Discrimination::from_parities(z.value, rot.value, odd_rot.value);
    let mut r = Report::default();
    r.value("p_odd_z", z);
    r.value("p_even_rotated", rot);
    r.value("p_odd_rotated", odd_rot);
    r.value("contrast", Estimate::new(rot.value - odd_rot.value, 2.0 * rot.stderr));
    let identified = match sampled.label {
        Some(BellLabel::PsiPlus) => 1.0,
        Some(BellLabel::PsiMinus) => -1.0,
        _ => 0.0,
    };
    r.exact("identified", identified);
    heralds(&mut r, &prepared);
    r.plot(
        "parities",
        "x = 0: P(odd) in Z; x = 1: P(even) in -X; x = 2: P(odd) in -X",
        vec![[0.0, z.value, z.stderr], [1.0, rot.value, rot.stderr], [2.0, odd_rot.value, odd_rot.stderr]],
    );
    r.notes.push("identified: +1 psi+, -1 psi-, 0 undecided".into());
    r.notes.push("parities are readout-corrected".into());
    Ok(r)
}

fn readout_calib(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    let exact = confusion_from_readout_model(&models.readout)?;
    let mut r = Report::default();
    let mut plot = Vec::new();
    let mut diag = Vec::new();
    for t in NuclearState::ALL {
        let row: [Estimate; 4] = match seed_of(cfg.mode) {
            None => exact.rows()[t.index()].map(Estimate::exact),
            Some((n, seed)) => {
                let mut pops = [0.0; 4];
                pops[t.index()] = 1.0;
                let counts = sample_counts(&pops, &models.readout, n, &mut substream(seed, t.index() as u64))?;
                counts.map(|k| Estimate::proportion(k, n))
            }
        };
        for a in NuclearState::ALL {
            let e = row[a.index()];
            r.value(format!("m_{}_{}", t.label(), a.label()), e);
            plot.push([(4 * t.index() + a.index()) as f64, e.value, e.stderr]);
        }
        diag.push(row[t.index()]);
    }
    for (t, e) in NuclearState::ALL.iter().zip(&diag) {
        r.value(format!("fidelity_{}", t.label()), *e);
    }
    r.plot("confusion", "assignment probability, x = 4 true + assigned", plot);
    r.notes.push(format!(
        "probe order {}",
        models.readout.probe_order.iter().map(|s| s.label()).collect::<Vec<_>>().join(", ")
    ));
    Ok(r)
}

fn chsh(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    let angles = ChshAngles::standard();
    let assignment = ChshAssignment::optimal(cfg.bell, &angles)?;
    let run = chsh_experiment(cfg.bell, &angles, assignment, cfg.mode, &models.noise, &models.readout)?;
    let mut r = Report::default();
    for i in 0..2 {
        for j in 0..2 {
            r.value(format!("e_{}{}", i + 1, j + 1), run.result.correlations[i][j]);
        }
    }
    r.value("s", run.result.s);
    r.value("abs_s", Estimate::new(run.result.s.value.abs(), run.result.s.stderr));
    r.exact("success_probability", run.success_probability);

    let prepared = prepare_bell(cfg.bell, &models.noise, &models.readout)?;
    let mut hist = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let setting = 2 * i + j;
            let probs: [Estimate; 4] = match seed_of(cfg.mode) {
                None => chsh_distribution(&prepared.final_state, angles.phi[i], angles.theta[j], &models.readout)?
                    .map(Estimate::exact),
                Some((n, _)) => {
                    let mut counts = [0u64; 4];
                    for rec in run.records.iter().filter(|rec| rec.seed == setting as u64) {
                        counts[rec.outcome.index()] += 1;
                    }
                    counts.map(|k| Estimate::proportion(k, n))
                }
            };
            for (o, e) in probs.iter().enumerate() {
                hist.push([(4 * setting + o) as f64, e.value, e.stderr]);
            }
        }
    }
    r.plot("histogram", "outcome probabilities, x = 4 (2 i + j) + outcome for (phi_i, theta_j)", hist);
    let [(a, b), (c, d), (e, f), (g, h)] = assignment.order();
    r.notes.push(format!(
        "S = {}(E{}{} - E{}{} - E{}{} - E{}{}), C rotated by pi/4 and 3pi/4, N by 0 and pi/2, about -Y",
        if assignment.negate { "-" } else { "" },
        a + 1,
        b + 1,
        c + 1,
        d + 1,
        e + 1,
        f + 1,
        g + 1,
        h + 1
    ));
    Ok(r)
}

fn rabi(cfg: &ExperimentConfig, models: &Models) -> Result<Report> {
    let angles = grid(cfg.points, 4.0 * PI, true);
    let mut r = Report::default();
    for (k, (q, name)) in [(Qubit::C, "c"), (Qubit::N, "n")].into_iter().enumerate() {
        let p0 = rabi_sweep(q, &angles, &models.noise, &models.readout)?;
        let (ys, errs) = measured(&p0, cfg.mode, (k * angles.len()) as u64);
        let fit = sinusoid_fit(&angles, &ys.iter().map(|e| e.value).collect::<Vec<_>>(), &errs)?;
        r.value(format!("contrast_{name}"), Estimate::new(2.0 * fit.amplitude.value, 2.0 * fit.amplitude.stderr));
        r.value(format!("offset_{name}"), fit.offset);
        r.plot(
            &format!("p_{name}0"),
            &format!("P_{}(0) against rotation angle", name.to_uppercase()),
            rows(&angles, &ys),
        );
        r.plot(&format!("fit_{name}"), "fitted P(0)", curve(&fit, 0.0, 4.0 * PI));
    }
    r.notes.push("probabilities include readout errors".into());
    Ok(r)
}
