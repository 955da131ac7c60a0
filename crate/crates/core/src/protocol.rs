//! Experiment pipelines on the register: initialization by measurement,
//! heralded parity measurement, Bell-state preparation, basis sweeps,
//! sequential single-shot readout and CHSH runs, in exact and sampled form.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::{
    axis, equatorial_readout_rotation, noisy_pi_pulse, rf_rotation, ConditionalFlipSpec, NuclearState, PulseSpec,
    RotationSpec,
};
use crate::linalg::{Matrix, C64, ZERO};
use crate::noise::{c64, optical_pump, readout_flip, reset_pulse, ConfusionMatrix, NoiseModel, ReadoutModel, CLICK};
use crate::qstate::{
    apply_channel, apply_unitary, embed, measure_outcome, partial_trace, projector_probabilities, tensor,
    DensityMatrix, HeraldedOutcome, KrausChannel, ProjectorSet, Qubit, QubitSet,
};
use crate::tomo::{chsh_s, correlation_e, ChshResult, Estimate};

/// The four Bell states of the nuclear pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    pub fn vector(self) -> [C64; 4] {
        let s = c64(FRAC_1_SQRT_2);
        match self {
            Self::PhiPlus => [s, ZERO, ZERO, s],
            Self::PhiMinus => [s, ZERO, ZERO, -s],
            Self::PsiPlus => [ZERO, s, s, ZERO],
            Self::PsiMinus => [ZERO, s, -s, ZERO],
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            Self::PhiPlus | Self::PhiMinus => Parity::Even,
            Self::PsiPlus | Self::PsiMinus => Parity::Odd,
        }
    }

    /// Axis angles of the π/2 pulses on (C, N) that, followed by the parity
    /// projection, produce this state from `|00⟩`.
    pub fn pulse_axes(self) -> (f64, f64) {
        match self {
            Self::PhiPlus | Self::PsiPlus => (axis::Y, axis::Y),
            Self::PhiMinus => (axis::Y, axis::MINUS_Y),
            Self::PsiMinus => (axis::MINUS_Y, axis::Y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name().eq_ignore_ascii_case(s))
    }

    pub fn density_matrix(self) -> DensityMatrix {
        DensityMatrix::pure(QubitSet::NUCLEAR, &self.vector()).expect("Bell vectors are normalized")
    }
}

impl core::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Condition states of the two state-selective flips.
    pub fn conditions(self) -> [NuclearState; 2] {
        match self {
            Parity::Even => [NuclearState::S00, NuclearState::S11],
            Parity::Odd => [NuclearState::S01, NuclearState::S10],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// A heralded pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult {
    pub heralds: Vec<HeraldedOutcome>,
    /// Full register state at the end of the pipeline.
    pub register_state: DensityMatrix,
    /// Nuclear pair with the ancilla traced out.
    pub final_state: DensityMatrix,
    /// Product of all herald probabilities.
    pub success_probability: f64,
}

impl ProtocolResult {
    fn new(heralds: Vec<HeraldedOutcome>, register_state: DensityMatrix) -> Result<Self> {
        let final_state = partial_trace(&register_state, QubitSet::NUCLEAR)?;
        let success_probability = heralds.iter().map(|h| h.probability).product();
        Ok(Self { heralds, register_state, final_state, success_probability })
    }

    pub fn herald(&self, label: &str) -> Option<&HeraldedOutcome> {
        self.heralds.iter().find(|h| h.label == label)
    }
}

/// Diagnostic attached to a parity measurement whose ancilla was not
/// prepared in `|1⟩ₐ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaWarning {
    pub population_zero: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityOutcome {
    pub herald: HeraldedOutcome,
    pub warning: Option<AncillaWarning>,
}

/// Ancilla `|0⟩ₐ` population above which a parity measurement warns.
pub const ANCILLA_WARNING_TOL: f64 = 1e-9;

fn ancilla(state: usize) -> DensityMatrix {
    DensityMatrix::basis(QubitSet::single(Qubit::Ancilla), state).expect("qubit basis state")
}

fn with_ancilla(nuclear: &DensityMatrix, a: usize) -> Result<DensityMatrix> {
    tensor(nuclear, &ancilla(a))
}

fn noisy_flip(states: &[NuclearState], eps: f64) -> Result<KrausChannel> {
    noisy_pi_pulse(&PulseSpec::ConditionalFlip(ConditionalFlipSpec::new(states)?), eps)
}

fn herald(state: &DensityMatrix, label: &str, noise: &NoiseModel, readout: &ReadoutModel) -> Result<HeraldedOutcome> {
    let mut h = measure_outcome(state, &readout.click.instrument(), CLICK)?;
    h.label = label.to_string();
    h.post_state = apply_channel(&h.post_state, &readout_flip(noise.ancilla_flip_during_readout)?)?;
    Ok(h)
}

/// Heralds the nuclear pair into `|00⟩` from an arbitrary register state:
/// optical pumping of the ancilla, a flip conditional on `|00⟩` and a click.
pub fn initialize_from(state: &DensityMatrix, noise: &NoiseModel, readout: &ReadoutModel) -> Result<ProtocolResult> {
    noise.validate()?;
    readout.validate()?;
    let pumped = apply_channel(state, &optical_pump())?;
    let flipped = apply_channel(&pumped, &noisy_flip(&[NuclearState::S00], noise.eps_cond_flip)?)?;
    let h = herald(&flipped, "init", noise, readout)?;
    let state = h.post_state.clone();
    ProtocolResult::new(vec![h], state)
}

/// [`initialize_from`] on the fully mixed register.
pub fn initialize_by_measurement(noise: &NoiseModel, readout: &ReadoutModel) -> Result<ProtocolResult> {
    initialize_from(&DensityMatrix::maximally_mixed(QubitSet::REGISTER)?, noise, readout)
}

/// Noisy π-pulse returning a read-out ancilla to `|1⟩ₐ`.
pub fn ancilla_reset(state: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
    apply_channel(state, &reset_pulse(noise.eps_pi)?)
}

/// Idle window, two state-selective flips for `parity` and a click herald.
/// The ancilla is then left with the post-readout flip applied.
pub fn parity_measurement(
    state: &DensityMatrix,
    parity: Parity,
    noise: &NoiseModel,
    readout: &ReadoutModel,
) -> Result<ParityOutcome> {
    noise.validate()?;
    readout.validate()?;
    let population_zero = state.marginal_zero(Qubit::Ancilla)?;
    let warning = (population_zero > ANCILLA_WARNING_TOL).then_some(AncillaWarning { population_zero });
    let mut rho = state.clone();
    for ch in noise.idle_channels()? {
        rho = apply_channel(&rho, &ch)?;
    }
    for s in parity.conditions() {
        rho = apply_channel(&rho, &noisy_flip(&[s], noise.eps_cond_flip)?)?;
    }
    let label = match parity {
        Parity::Even => "parity-even",
        Parity::Odd => "parity-odd",
    };
    Ok(ParityOutcome { herald: herald(&rho, label, noise, readout)?, warning })
}

/// Two back-to-back parity measurements with an ancilla reset in between.
/// Returns the first outcome and the probability that the second one heralds
/// again.
pub fn parity_repeat(
    state: &DensityMatrix,
    parity: Parity,
    noise: &NoiseModel,
    readout: &ReadoutModel,
) -> Result<(ParityOutcome, f64)> {
    let first = parity_measurement(state, parity, noise, readout)?;
    let reset = ancilla_reset(&first.herald.post_state, noise)?;
    let second = parity_measurement(&reset, parity, noise, readout)?;
    Ok((first, second.herald.probability))
}

/// Initialization, reset and the two π/2 pulses: the product superposition
/// that the parity measurement projects.
pub fn prepare_superposition(which: BellLabel, noise: &NoiseModel, readout: &ReadoutModel) -> Result<ProtocolResult> {
    let init = initialize_by_measurement(noise, readout)?;
    let mut rho = ancilla_reset(&init.register_state, noise)?;
    let (ac, an) = which.pulse_axes();
    rho = apply_unitary(&rho, &rf_rotation(&RotationSpec::new(Qubit::C, ac, FRAC_PI_2))?)?;
    rho = apply_unitary(&rho, &rf_rotation(&RotationSpec::new(Qubit::N, an, FRAC_PI_2))?)?;
    ProtocolResult::new(init.heralds, rho)
}

/// Full entanglement-by-measurement pipeline ending with the ancilla reset.
pub fn prepare_bell(which: BellLabel, noise: &NoiseModel, readout: &ReadoutModel) -> Result<ProtocolResult> {
    let sup = prepare_superposition(which, noise, readout)?;
    let parity = parity_measurement(&sup.register_state, which.parity(), noise, readout)?;
    let rho = ancilla_reset(&parity.herald.post_state, noise)?;
    let mut heralds = sup.heralds;
    heralds.push(parity.herald);
    ProtocolResult::new(heralds, rho)
}

/// Single-qubit measurement basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementBasis {
    Z,
    /// Equatorial direction at this azimuth (0 = +X, π/2 = +Y).
    Equatorial(f64),
}

impl MeasurementBasis {
    pub const X: MeasurementBasis = MeasurementBasis::Equatorial(0.0);
    pub const Y: MeasurementBasis = MeasurementBasis::Equatorial(FRAC_PI_2);
    pub const MINUS_X: MeasurementBasis = MeasurementBasis::Equatorial(PI);

    /// Rotation mapping this basis onto Z; outcome 0 is the +1 eigenvector.
    pub fn rotation(self, target: Qubit) -> Option<RotationSpec> {
        match self {
            MeasurementBasis::Z => None,
            MeasurementBasis::Equatorial(azimuth) => Some(equatorial_readout_rotation(target, azimuth)),
        }
    }
}

/// Applies the basis-change rotations for (C, N) to a nuclear or register state.
pub fn rotate_to_bases(state: &DensityMatrix, c: MeasurementBasis, n: MeasurementBasis) -> Result<DensityMatrix> {
    let mut rho = state.clone();
    for (q, basis) in [(Qubit::C, c), (Qubit::N, n)] {
        if let Some(spec) = basis.rotation(q) {
            rho = apply_unitary(&rho, &rf_rotation(&spec)?)?;
        }
    }
    Ok(rho)
}

/// Z-basis populations `[p00, p01, p10, p11]` of the nuclear pair.
pub fn nuclear_populations(state: &DensityMatrix) -> Result<[f64; 4]> {
    let rho =
        if state.qubits() == QubitSet::NUCLEAR { state.clone() } else { partial_trace(state, QubitSet::NUCLEAR)? };
    let p = rho.populations();
    Ok([p[0], p[1], p[2], p[3]])
}

/// Outcome distribution of a measurement in the given bases, optionally
/// passed through a readout confusion matrix.
pub fn measure_in_bases(
    state: &DensityMatrix,
    c: MeasurementBasis,
    n: MeasurementBasis,
    confusion: Option<&ConfusionMatrix>,
) -> Result<[f64; 4]> {
    let pops = nuclear_populations(&rotate_to_bases(state, c, n)?)?;
    Ok(match confusion {
        Some(m) => m.apply(&pops),
        None => pops,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub p_even: f64,
    /// Probability of the C qubit reading 0.
    pub p_c0: f64,
}

/// Parity and C-marginal curves with C measured along the azimuth `π + α`
/// (rotated by α from −X) and N in `n_basis`.
pub fn basis_sweep(
    state: &DensityMatrix,
    alphas: &[f64],
    n_basis: MeasurementBasis,
    confusion: Option<&ConfusionMatrix>,
) -> Result<Vec<SweepPoint>> {
    alphas
        .iter()
        .map(|&alpha| {
            let p = measure_in_bases(state, MeasurementBasis::Equatorial(PI + alpha), n_basis, confusion)?;
            Ok(SweepPoint { alpha, p_even: p[0] + p[3], p_c0: p[0] + p[1] })
        })
        .collect()
}

/// Exact outcome distribution of the sequential-probe readout, evolving the
/// register density matrix through every probe with full back-action. A
/// two-qubit input is joined with an ancilla in `|1⟩ₐ`. Runs that never
/// click within `max_rounds` are discarded.
pub fn readout_distribution(state: &DensityMatrix, readout: &ReadoutModel) -> Result<[f64; 4]> {
    readout.validate()?;
    let mut alive = match state.qubits() {
        QubitSet::REGISTER => state.matrix().clone(),
        QubitSet::NUCLEAR => with_ancilla(state, 1)?.into_matrix(),
        _ => return Err(Error::Precondition("readout needs the nuclear pair")),
    };
    let a = QubitSet::single(Qubit::Ancilla);
    let reg = QubitSet::REGISTER;
    let pump: Vec<Matrix> = optical_pump().operators().iter().map(|k| embed(k, a, reg)).collect::<Result<_>>()?;
    let (b, d) = (readout.probe_click.p_click_bright, readout.probe_click.p_click_dark);
    let k_click = embed(&Matrix::from_real_diagonal(&[crate::math::sqrt(b), crate::math::sqrt(d)]), a, reg)?;
    let k_none = embed(&Matrix::from_real_diagonal(&[crate::math::sqrt(1.0 - b), crate::math::sqrt(1.0 - d)]), a, reg)?;
    let flips: Vec<Vec<Matrix>> = readout
        .probe_order
        .iter()
        .map(|&s| noisy_flip(&[s], readout.probe_flip_error).map(|ch| ch.operators().to_vec()))
        .collect::<Result<_>>()?;

    let mut dist = [0.0; 4];
    let start = alive.trace().re;
    for _ in 0..readout.max_rounds {
        alive = sum_sandwich(&pump, &alive);
        for (s, ops) in readout.probe_order.iter().zip(&flips) {
            alive = sum_sandwich(ops, &alive);
            dist[s.index()] += k_click.sandwich(&alive).trace().re;
            alive = k_none.sandwich(&alive);
        }
        if alive.trace().re < 1e-17 * start {
            break;
        }
    }
    let total: f64 = dist.iter().sum();
    if total < 1e-12 {
        return Err(Error::ReadoutNotConverged(readout.max_rounds));
    }
    Ok(dist.map(|p| p / total))
}

fn sum_sandwich(ops: &[Matrix], rho: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(rho.dim());
    for k in ops {
        out.add_assign(&k.sandwich(rho));
    }
    out
}

/// Independent generator for sub-experiment `stream` of a run seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index from a discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let total: f64 = probabilities.iter().sum();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p / total;
        if u < acc {
            return i;
        }
    }
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// One sampled shot of the sequential-probe readout for a state with Z-basis
/// populations `populations`. The readout operations are diagonal in the
/// nuclear basis, so drawing the eigenstate first and then simulating the
/// probe chain reproduces the full back-action statistics.
pub fn sample_readout<R: Rng + ?Sized>(
    populations: &[f64; 4],
    readout: &ReadoutModel,
    rng: &mut R,
) -> Result<NuclearState> {
    let truth = NuclearState::ALL[sample_index(populations, rng)];
    let (b, d) = (readout.probe_click.p_click_bright, readout.probe_click.p_click_dark);
    for _ in 0..readout.max_rounds {
        let mut bright = false;
        for &s in &readout.probe_order {
            if s == truth && rng.random::<f64>() >= readout.probe_flip_error {
                bright = !bright;
            }
            let p = if bright { b } else { d };
            if rng.random::<f64>() < p {
                return Ok(s);
            }
        }
    }
    Err(Error::ReadoutNotConverged(readout.max_rounds))
}

/// Outcome counts `[n00, n01, n10, n11]` of `shots` sampled readouts.
pub fn sample_counts<R: Rng + ?Sized>(
    populations: &[f64; 4],
    readout: &ReadoutModel,
    shots: u64,
    rng: &mut R,
) -> Result<[u64; 4]> {
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        counts[sample_readout(populations, readout, rng)?.index()] += 1;
    }
    Ok(counts)
}

/// How outcome probabilities are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo { shots: u64, seed: u64 },
}

/// One sampled single-shot readout of a CHSH run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotRecord {
    pub bell: BellLabel,
    /// Rotation angles (φ on C, θ on N) about −Y.
    pub angles: (f64, f64),
    pub outcome: NuclearState,
    /// Sub-seed stream the shot was drawn from.
    pub seed: u64,
}

/// Rotation angles about −Y for the two CHSH settings of each qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshAngles {
    pub phi: [f64; 2],
    pub theta: [f64; 2],
}

impl ChshAngles {
    /// C rotated by {π/4, 3π/4}, N by {0, π/2}.
    pub fn standard() -> Self {
        Self { phi: [FRAC_PI_4, 3.0 * FRAC_PI_4], theta: [0.0, FRAC_PI_2] }
    }
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self::standard()
    }
}

/// Roles of the measured settings in `S = E(φ1,θ1) − E(φ1,θ2) − E(φ2,θ1) − E(φ2,θ2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChshAssignment {
    /// φ1 is `phi[1]` instead of `phi[0]`.
    pub swap_phi: bool,
    /// θ1 is `theta[1]` instead of `theta[0]`.
    pub swap_theta: bool,
    /// Overall sign applied to S.
    pub negate: bool,
}

impl ChshAssignment {
    pub fn all() -> [ChshAssignment; 8] {
        core::array::from_fn(|k| ChshAssignment { swap_phi: k & 1 == 1, swap_theta: k & 2 == 2, negate: k & 4 == 4 })
    }

    /// Indices `(i, j)` into the angle arrays for `(φ1,θ1), (φ1,θ2), (φ2,θ1), (φ2,θ2)`.
    pub fn order(&self) -> [(usize, usize); 4] {
        let p1 = self.swap_phi as usize;
        let t1 = self.swap_theta as usize;
        [(p1, t1), (p1, 1 - t1), (1 - p1, t1), (1 - p1, 1 - t1)]
    }

    /// Assignment maximizing S for the ideal state `which`.
    pub fn optimal(which: BellLabel, angles: &ChshAngles) -> Result<ChshAssignment> {
        let rho = which.density_matrix();
        let ideal = ReadoutModel::ideal();
        let mut e = [[0.0; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = correlation_e(&chsh_distribution(&rho, angles.phi[i], angles.theta[j], &ideal)?)?;
            }
        }
        let mut best = (f64::NEG_INFINITY, ChshAssignment::all()[0]);
        for a in ChshAssignment::all() {
            let s = a.combine(&e);
            if s > best.0 + 1e-12 {
                best = (s, a);
            }
        }
        Ok(best.1)
    }

    pub(crate) fn combine(&self, e: &[[f64; 2]; 2]) -> f64 {
        let [a, b, c, d] = self.order().map(|(i, j)| e[i][j]);
        let s = a - b - c - d;
        if self.negate {
            -s
        } else {
            s
        }
    }
}

/// Readout distribution after rotating C by `phi` and N by `theta` about −Y.
pub fn chsh_distribution(state: &DensityMatrix, phi: f64, theta: f64, readout: &ReadoutModel) -> Result<[f64; 4]> {
    let mut rho = apply_unitary(state, &rf_rotation(&RotationSpec::new(Qubit::C, axis::MINUS_Y, phi))?)?;
    rho = apply_unitary(&rho, &rf_rotation(&RotationSpec::new(Qubit::N, axis::MINUS_Y, theta))?)?;
    readout_distribution(&rho, readout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshRun {
    pub result: ChshResult,
    /// Sampled shots in setting order; empty in exact mode.
    pub records: Vec<ShotRecord>,
    /// Probability that a preparation attempt is heralded.
    pub success_probability: f64,
}

/// Prepares `which`, measures all four setting pairs and combines them.
/// Settings are indexed `2i + j` for `(phi[i], theta[j])`; sampled mode uses
/// that index as sub-seed stream.
pub fn chsh_experiment(
    which: BellLabel,
    angles: &ChshAngles,
    assignment: ChshAssignment,
    mode: Mode,
    noise: &NoiseModel,
    readout: &ReadoutModel,
) -> Result<ChshRun> {
    let prepared = prepare_bell(which, noise, readout)?;
    chsh_on_state(&prepared.final_state, which, angles, assignment, mode, readout).map(|(result, records)| ChshRun {
        result,
        records,
        success_probability: prepared.success_probability,
    })
}

/// CHSH measurement of an already prepared nuclear state.
pub fn chsh_on_state(
    state: &DensityMatrix,
    which: BellLabel,
    angles: &ChshAngles,
    assignment: ChshAssignment,
    mode: Mode,
    readout: &ReadoutModel,
) -> Result<(ChshResult, Vec<ShotRecord>)> {
    let mut e = [[Estimate::exact(0.0); 2]; 2];
    let mut records = Vec::new();
    if let Mode::MonteCarlo { shots: 0, .. } = mode {
        return Err(Error::Precondition("at least one shot per setting"));
    }
    for (i, &phi) in angles.phi.iter().enumerate() {
        for (j, &theta) in angles.theta.iter().enumerate() {
            e[i][j] = match mode {
                Mode::Exact => Estimate::exact(correlation_e(&chsh_distribution(state, phi, theta, readout)?)?),
                Mode::MonteCarlo { shots, seed } => {
                    let stream = (2 * i + j) as u64;
                    let mut rng = substream(seed, stream);
                    let mut rotated =
                        apply_unitary(state, &rf_rotation(&RotationSpec::new(Qubit::C, axis::MINUS_Y, phi))?)?;
                    rotated =
                        apply_unitary(&rotated, &rf_rotation(&RotationSpec::new(Qubit::N, axis::MINUS_Y, theta))?)?;
                    let pops = nuclear_populations(&rotated)?;
                    let mut counts = [0u64; 4];
                    for _ in 0..shots {
                        let outcome = sample_readout(&pops, readout, &mut rng)?;
                        counts[outcome.index()] += 1;
                        records.push(ShotRecord { bell: which, angles: (phi, theta), outcome, seed: stream });
                    }
                    Estimate::correlation_from_counts(&counts)
                }
            };
        }
    }
    Ok((chsh_s(*angles, e, assignment), records))
}

/// Outcome of the two-step Ψ± discrimination.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrimination {
    /// Odd-parity probability in the Z basis.
    pub p_odd_z: f64,
    /// Parity probabilities after rotating both qubits to the −X basis.
    pub p_even_rotated: f64,
    pub p_odd_rotated: f64,
    /// `None` when the rotated parities differ by less than [`Discrimination::MARGIN`].
    pub label: Option<BellLabel>,
}

impl Discrimination {
    pub const MARGIN: f64 = 0.05;

    pub fn from_parities(p_odd_z: f64, p_even_rotated: f64, p_odd_rotated: f64) -> Self {
        let label = if (p_even_rotated - p_odd_rotated).abs() < Self::MARGIN {
            None
        } else if p_even_rotated > p_odd_rotated {
            Some(BellLabel::PsiPlus)
        } else {
            Some(BellLabel::PsiMinus)
        };
        Self { p_odd_z, p_even_rotated, p_odd_rotated, label }
    }
}

/// Tells Ψ+ from Ψ−: a heralded odd-parity measurement in Z, an ancilla reset,
/// a rotation of both qubits to the −X basis and the rotated parity.
pub fn bell_discriminate(state: &DensityMatrix, noise: &NoiseModel, readout: &ReadoutModel) -> Result<Discrimination> {
    let register = match state.qubits() {
        QubitSet::NUCLEAR => with_ancilla(state, 1)?,
        QubitSet::REGISTER => state.clone(),
        _ => return Err(Error::Precondition("discrimination needs the nuclear pair")),
    };
    let parity = ProjectorSet::parity();
    let z = projector_probabilities(&partial_trace(&register, QubitSet::NUCLEAR)?, &parity)?;
    let p_odd_z = z[1].1;
    let odd = parity_measurement(&register, Parity::Odd, noise, readout)?;
    let reset = ancilla_reset(&odd.herald.post_state, noise)?;
    let rotated = rotate_to_bases(&reset, MeasurementBasis::MINUS_X, MeasurementBasis::MINUS_X)?;
    let r = projector_probabilities(&partial_trace(&rotated, QubitSet::NUCLEAR)?, &parity)?;
    Ok(Discrimination::from_parities(p_odd_z, r[0].1, r[1].1))
}

/// Probability that `target` reads 0 after initialization and a rotation by
/// each angle about X, through the given readout.
pub fn rabi_sweep(target: Qubit, angles: &[f64], noise: &NoiseModel, readout: &ReadoutModel) -> Result<Vec<f64>> {
    let init = initialize_by_measurement(noise, readout)?;
    let start = ancilla_reset(&init.register_state, noise)?;
    let bit = match target {
        Qubit::C => 2,
        Qubit::N => 1,
        Qubit::Ancilla => return Err(Error::Precondition("RF rotations address the nuclear qubits only")),
    };
    angles
        .iter()
        .map(|&theta| {
            let rho = apply_unitary(&start, &rf_rotation(&RotationSpec::new(target, axis::X, theta))?)?;
            let dist = readout_distribution(&rho, readout)?;
            Ok((0..4).filter(|k| k & bit == 0).map(|k| dist[k]).sum())
        })
        .collect()
}

/// Readout distribution of every nuclear eigenstate, i.e. the confusion
/// matrix obtained from the density-matrix readout rather than the scalar
/// enumeration of [`crate::noise::confusion_from_readout_model`].
pub fn simulated_confusion(readout: &ReadoutModel) -> Result<ConfusionMatrix> {
    let mut rows = [[0.0; 4]; 4];
    for s in NuclearState::ALL {
        rows[s.index()] = readout_distribution(&DensityMatrix::basis(QubitSet::NUCLEAR, s.index())?, readout)?;
    }
    ConfusionMatrix::new(rows)
}
