//! Pulse library: RF rotations on the nuclear qubits, state-selective ancilla
//! flips (the Toffoli-type gates addressed through the hyperfine-split
//! electron transitions) and their imperfect versions.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{check_probability, Error, Result};
use crate::linalg::{phase, Matrix, C64, ONE, ZERO};
use crate::math;
use crate::qstate::{GateOp, KrausChannel, Qubit, QubitSet};

/// Hyperfine constant of the ¹³C spin, in Hz. Documentation only: selective
/// addressing is taken as perfect apart from pulse failures.
pub const HYPERFINE_C_HZ: f64 = 12.796e6;
/// Hyperfine constant of the ¹⁴N spin, in Hz.
pub const HYPERFINE_N_HZ: f64 = 2.184e6;

/// Rotation axis angles in the equatorial plane.
pub mod axis {
    use core::f64::consts::{FRAC_PI_2, PI};

    pub const X: f64 = 0.0;
    pub const Y: f64 = FRAC_PI_2;
    pub const MINUS_X: f64 = PI;
    pub const MINUS_Y: f64 = 3.0 * FRAC_PI_2;
}

/// `exp(-i θ/2 (cos φ σx + sin φ σy))` on a nuclear qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSpec {
    pub target: Qubit,
    /// Axis angle φ in the equatorial plane (0 = X, π/2 = Y).
    pub axis_angle: f64,
    /// Rotation angle θ.
    pub rotation_angle: f64,
}

impl RotationSpec {
    pub fn new(target: Qubit, axis_angle: f64, rotation_angle: f64) -> Self {
        Self { target, axis_angle, rotation_angle }
    }
}

/// Two-qubit computational basis state of the nuclear pair, `index = 2c + n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NuclearState(u8);

impl NuclearState {
    pub const S00: NuclearState = NuclearState(0);
    pub const S01: NuclearState = NuclearState(1);
    pub const S10: NuclearState = NuclearState(2);
    pub const S11: NuclearState = NuclearState(3);
    pub const ALL: [NuclearState; 4] = [Self::S00, Self::S01, Self::S10, Self::S11];

    pub fn from_index(index: usize) -> Option<Self> {
        (index < 4).then_some(NuclearState(index as u8))
    }

    pub fn from_bits(c: u8, n: u8) -> Self {
        NuclearState(((c & 1) << 1) | (n & 1))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn c(self) -> u8 {
        self.0 >> 1
    }

    pub fn n(self) -> u8 {
        self.0 & 1
    }

    pub fn is_even(self) -> bool {
        self.c() == self.n()
    }

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self.index()]
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "00" => Some(Self::S00),
            "01" => Some(Self::S01),
            "10" => Some(Self::S10),
            "11" => Some(Self::S11),
            _ => None,
        }
    }
}

/// Set of nuclear basis states on which the ancilla is flipped.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalFlipSpec {
    conditions: Vec<NuclearState>,
}

impl ConditionalFlipSpec {
    pub fn new(conditions: &[NuclearState]) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::Precondition("conditional flip needs at least one condition state"));
        }
        let mut conditions = conditions.to_vec();
        conditions.sort();
        conditions.dedup();
        Ok(Self { conditions })
    }

    pub fn single(state: NuclearState) -> Self {
        Self { conditions: alloc::vec![state] }
    }

    pub fn conditions(&self) -> &[NuclearState] {
        &self.conditions
    }
}

/// Either pulse type, for [`noisy_pi_pulse`].
#[derive(Clone, Debug, PartialEq)]
pub enum PulseSpec {
    Rotation(RotationSpec),
    ConditionalFlip(ConditionalFlipSpec),
    /// Unconditional π-pulse on the ancilla (the reset pulse).
    AncillaFlip,
}

fn rotation_matrix(axis_angle: f64, theta: f64) -> Matrix {
    let c = math::cos(theta / 2.0);
    let s = math::sin(theta / 2.0);
    // -i s (cos φ σx + sin φ σy) has off-diagonals -i s e^{-iφ} (0,1) and -i s e^{iφ} (1,0)
    let minus_i_s = C64::new(0.0, -s);
    Matrix::from_rows(&[
        [C64::new(c, 0.0), minus_i_s * phase(-axis_angle)],
        [minus_i_s * phase(axis_angle), C64::new(c, 0.0)],
    ])
}

pub fn rf_rotation(spec: &RotationSpec) -> Result<GateOp> {
    if spec.target == Qubit::Ancilla {
        return Err(Error::Precondition("RF rotations address the nuclear qubits only"));
    }
    if !spec.axis_angle.is_finite() || !spec.rotation_angle.is_finite() {
        return Err(Error::OutOfRange { name: "rotation angle", value: f64::NAN });
    }
    GateOp::new(rotation_matrix(spec.axis_angle, spec.rotation_angle), QubitSet::single(spec.target))
}

/// Block-diagonal register unitary applying X to the ancilla exactly when the
/// nuclear pair is in one of the condition states.
pub fn conditional_ancilla_flip(spec: &ConditionalFlipSpec) -> GateOp {
    let mut u = Matrix::zeros(8);
    for state in NuclearState::ALL {
        let base = 2 * state.index();
        if spec.conditions.contains(&state) {
            u[(base, base + 1)] = ONE;
            u[(base + 1, base)] = ONE;
        } else {
            u[(base, base)] = ONE;
            u[(base + 1, base + 1)] = ONE;
        }
    }
    GateOp::new(u, QubitSet::REGISTER).expect("permutation matrix is unitary")
}

pub fn ancilla_x() -> GateOp {
    GateOp::new(Matrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]]), QubitSet::single(Qubit::Ancilla))
        .expect("Pauli X is unitary")
}

pub fn ideal_pulse(spec: &PulseSpec) -> Result<GateOp> {
    match spec {
        PulseSpec::Rotation(r) => rf_rotation(r),
        PulseSpec::ConditionalFlip(c) => Ok(conditional_ancilla_flip(c)),
        PulseSpec::AncillaFlip => Ok(ancilla_x()),
    }
}

/// Pulse that acts ideally with probability `1 - eps` and does nothing with
/// probability `eps`.
pub fn noisy_pi_pulse(spec: &PulseSpec, eps: f64) -> Result<KrausChannel> {
    check_probability("eps", eps)?;
    let gate = ideal_pulse(spec)?;
    KrausChannel::mixture(&gate, &GateOp::identity(gate.targets()), eps)
}

/// Rotation that turns a Z-basis readout of `target` into a readout along
/// the equatorial direction at azimuth `azimuth` (0 = +X, π/2 = +Y).
pub fn equatorial_readout_rotation(target: Qubit, azimuth: f64) -> RotationSpec {
    RotationSpec::new(target, azimuth - FRAC_PI_2, FRAC_PI_2)
}

/// `exp(-i φ/2 Z⊗Z)` on the nuclear pair: relative phase φ between the even
/// and odd parity subspaces.
pub fn zz_phase(conditional_phase: f64) -> GateOp {
    let even = phase(-conditional_phase / 2.0);
    let odd = phase(conditional_phase / 2.0);
    let mut u = Matrix::zeros(4);
    for s in NuclearState::ALL {
        u[(s.index(), s.index())] = if s.is_even() { even } else { odd };
    }
    GateOp::new(u, QubitSet::NUCLEAR).expect("diagonal phases are unitary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{apply_channel, apply_unitary, DensityMatrix};
    use core::f64::consts::PI;

    fn c0() -> DensityMatrix {
        DensityMatrix::basis(QubitSet::single(Qubit::C), 0).unwrap()
    }

    #[test]
    fn zero_rotation_is_identity() {
        let g = rf_rotation(&RotationSpec::new(Qubit::C, 0.7, 0.0)).unwrap();
        assert!(g.unitary().max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn pi_about_x_flips() {
        let g = rf_rotation(&RotationSpec::new(Qubit::C, axis::X, PI)).unwrap();
        let out = apply_unitary(&c0(), &g).unwrap();
        assert!((out.get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_pi_about_minus_y_gives_minus_x_state() {
        // exp(+iπ/4 σy)|0⟩ = (|0⟩ - |1⟩)/√2: real entries of magnitude 1/2, negative coherences.
        let g = rf_rotation(&RotationSpec::new(Qubit::C, axis::MINUS_Y, FRAC_PI_2)).unwrap();
        let out = apply_unitary(&c0(), &g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v = out.get(i, j);
                let expected = if i == j { 0.5 } else { -0.5 };
                assert!((v.re - expected).abs() < 1e-15, "{v}");
                assert!(v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rabi_curve_follows_cosine_squared() {
        for k in 0..=64 {
            let theta = 4.0 * PI * k as f64 / 64.0;
            let g = rf_rotation(&RotationSpec::new(Qubit::N, axis::X, theta)).unwrap();
            let rho = DensityMatrix::basis(QubitSet::single(Qubit::N), 0).unwrap();
            let p0 = apply_unitary(&rho, &g).unwrap().get(0, 0).re;
            let expected = math::cos(theta / 2.0) * math::cos(theta / 2.0);
            assert!((p0 - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn ancilla_is_not_an_rf_target() {
        assert!(rf_rotation(&RotationSpec::new(Qubit::Ancilla, 0.0, PI)).is_err());
    }

    #[test]
    fn conditional_flip_examples() {
        let flip = conditional_ancilla_flip(&ConditionalFlipSpec::single(NuclearState::S00));
        // |00⟩|1⟩ (index 1) -> |00⟩|0⟩ (index 0)
        let out = apply_unitary(&DensityMatrix::basis(QubitSet::REGISTER, 1).unwrap(), &flip).unwrap();
        assert_eq!(out, DensityMatrix::basis(QubitSet::REGISTER, 0).unwrap());
        // |01⟩|1⟩ (index 3) unchanged
        let rho = DensityMatrix::basis(QubitSet::REGISTER, 3).unwrap();
        assert_eq!(apply_unitary(&rho, &flip).unwrap(), rho);
        assert!(ConditionalFlipSpec::new(&[]).is_err());
    }

    #[test]
    fn noisy_pulse_limits() {
        let spec = PulseSpec::ConditionalFlip(ConditionalFlipSpec::single(NuclearState::S11));
        let ideal = KrausChannel::from_gate(&ideal_pulse(&spec).unwrap());
        let rho = DensityMatrix::maximally_mixed(QubitSet::REGISTER)
            .unwrap()
            .mix(&DensityMatrix::basis(QubitSet::REGISTER, 7).unwrap(), 0.3)
            .unwrap();
        let a = apply_channel(&rho, &noisy_pi_pulse(&spec, 0.0).unwrap()).unwrap();
        let b = apply_channel(&rho, &ideal).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        let c = apply_channel(&rho, &noisy_pi_pulse(&spec, 1.0).unwrap()).unwrap();
        assert!(c.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert!(noisy_pi_pulse(&spec, 1.5).is_err());
        assert!(noisy_pi_pulse(&spec, -0.1).is_err());
    }

    #[test]
    fn equatorial_readout_rotation_maps_axis_to_z() {
        // |+x⟩ read along +X must give outcome 0 with certainty; |+y⟩ along +Y likewise.
        let s = core::f64::consts::FRAC_1_SQRT_2;
        for (azimuth, psi) in [
            (0.0, [C64::new(s, 0.0), C64::new(s, 0.0)]),
            (FRAC_PI_2, [C64::new(s, 0.0), C64::new(0.0, s)]),
            (PI, [C64::new(s, 0.0), C64::new(-s, 0.0)]),
        ] {
            let rho = DensityMatrix::pure(QubitSet::single(Qubit::C), &psi).unwrap();
            let g = rf_rotation(&equatorial_readout_rotation(Qubit::C, azimuth)).unwrap();
            let p0 = apply_unitary(&rho, &g).unwrap().get(0, 0).re;
            assert!((p0 - 1.0).abs() < 1e-14, "azimuth {azimuth}: {p0}");
        }
    }

    #[test]
    fn zz_phase_splits_parity_subspaces() {
        let g = zz_phase(0.3);
        let u = g.unitary();
        let rel = u[(1, 1)] / u[(0, 0)];
        assert!((rel - phase(0.3)).norm() < 1e-15);
        assert_eq!(u[(3, 3)], u[(0, 0)]);
    }
}
