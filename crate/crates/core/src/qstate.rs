//! Density matrices on (subsets of) the `(C, N, a)` register and the exact
//! operations on them: unitaries, Kraus channels, heralded measurements,
//! tensor products and partial traces.
//!
//! Qubits always appear in layout order, first qubit most significant, so a
//! full-register basis index is `4c + 2n + a`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64, ONE, ZERO};
use crate::math;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-12;
pub const TP_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const IMPOSSIBLE_TOL: f64 = 1e-12;

/// One of the three register qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    /// ¹³C nuclear spin.
    C,
    /// ¹⁴N nuclear spin (two levels used).
    N,
    /// NV electron spin, the readout ancilla.
    Ancilla,
}

impl Qubit {
    pub const ALL: [Qubit; 3] = [Qubit::C, Qubit::N, Qubit::Ancilla];

    fn bit(self) -> u8 {
        match self {
            Qubit::C => 0b100,
            Qubit::N => 0b010,
            Qubit::Ancilla => 0b001,
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qubit::C => "C",
            Qubit::N => "N",
            Qubit::Ancilla => "a",
        })
    }
}

/// A set of register qubits, iterated in layout order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct QubitSet(u8);

impl QubitSet {
    pub const EMPTY: QubitSet = QubitSet(0);
    pub const NUCLEAR: QubitSet = QubitSet(0b110);
    pub const REGISTER: QubitSet = QubitSet(0b111);

    pub fn of(qubits: &[Qubit]) -> Self {
        QubitSet(qubits.iter().fold(0, |acc, q| acc | q.bit()))
    }

    pub fn single(q: Qubit) -> Self {
        QubitSet(q.bit())
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, q: Qubit) -> bool {
        self.0 & q.bit() != 0
    }

    pub fn is_subset_of(self, other: QubitSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: QubitSet) -> QubitSet {
        QubitSet(self.0 | other.0)
    }

    pub fn difference(self, other: QubitSet) -> QubitSet {
        QubitSet(self.0 & !other.0)
    }

    pub fn dim(self) -> usize {
        1 << self.len()
    }

    pub fn iter(self) -> impl Iterator<Item = Qubit> {
        Qubit::ALL.into_iter().filter(move |q| self.contains(*q))
    }

    /// Bit position of `q` inside a basis index of a state on `self`
    /// (0 = least significant).
    fn shift_of(self, q: Qubit) -> Option<usize> {
        if !self.contains(q) {
            return None;
        }
        Some(self.iter().filter(|&other| other > q).count())
    }
}

/// Maps basis indices of the `outer` set onto (sub-index in `inner`, rest index).
struct IndexSplit {
    inner_bits: Vec<usize>,
    rest_bits: Vec<usize>,
}

impl IndexSplit {
    fn new(inner: QubitSet, outer: QubitSet) -> Self {
        let shifts = |set: QubitSet| -> Vec<usize> {
            set.iter().map(|q| outer.shift_of(q).expect("subset checked by caller")).collect()
        };
        Self { inner_bits: shifts(inner), rest_bits: shifts(outer.difference(inner)) }
    }

    fn gather(bits: &[usize], index: usize) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | ((index >> b) & 1))
    }

    fn inner(&self, index: usize) -> usize {
        Self::gather(&self.inner_bits, index)
    }

    fn rest(&self, index: usize) -> usize {
        Self::gather(&self.rest_bits, index)
    }

    fn compose(&self, inner: usize, rest: usize) -> usize {
        let mut index = 0;
        for (k, &b) in self.inner_bits.iter().enumerate() {
            let bit = (inner >> (self.inner_bits.len() - 1 - k)) & 1;
            index |= bit << b;
        }
        for (k, &b) in self.rest_bits.iter().enumerate() {
            let bit = (rest >> (self.rest_bits.len() - 1 - k)) & 1;
            index |= bit << b;
        }
        index
    }
}

/// Lifts an operator on `targets` to the space of `qubits` (identity elsewhere).
pub fn embed(op: &Matrix, targets: QubitSet, qubits: QubitSet) -> Result<Matrix> {
    if op.dim() != targets.dim() {
        return Err(Error::DimensionMismatch { expected: targets.dim(), actual: op.dim() });
    }
    if let Some(q) = targets.iter().find(|q| !qubits.contains(*q)) {
        return Err(Error::MissingQubit(q));
    }
    if targets == qubits {
        return Ok(op.clone());
    }
    let split = IndexSplit::new(targets, qubits);
    Ok(Matrix::from_fn(qubits.dim(), |i, j| {
        if split.rest(i) == split.rest(j) {
            op[(split.inner(i), split.inner(j))]
        } else {
            ZERO
        }
    }))
}

/// Hermitian, unit-trace matrix on a set of register qubits.
///
/// Positivity is not enforced at construction: linear-inversion estimates
/// may be slightly negative. Use [`DensityMatrix::min_eigenvalue`] to check.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: QubitSet,
    matrix: Matrix,
}

impl DensityMatrix {
    pub fn new(qubits: QubitSet, matrix: Matrix) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::EmptySelection);
        }
        if matrix.dim() != qubits.dim() {
            return Err(Error::DimensionMismatch { expected: qubits.dim(), actual: matrix.dim() });
        }
        if matrix.hermiticity_error() > HERMITIAN_TOL {
            return Err(Error::InvalidState("matrix is not Hermitian"));
        }
        if (matrix.trace() - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState("trace differs from one"));
        }
        Ok(Self { qubits, matrix })
    }

    /// Normalizes a positive operator by its trace.
    pub fn from_unnormalized(qubits: QubitSet, matrix: Matrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("non-positive trace"));
        }
        Self::new(qubits, matrix.scale_real(1.0 / tr))
    }

    pub fn pure(qubits: QubitSet, psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::UnnormalizedTarget(norm));
        }
        Self::new(qubits, Matrix::outer(psi))
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(qubits: QubitSet, index: usize) -> Result<Self> {
        let dim = qubits.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: index });
        }
        let mut m = Matrix::zeros(dim);
        m[(index, index)] = ONE;
        Self::new(qubits, m)
    }

    pub fn maximally_mixed(qubits: QubitSet) -> Result<Self> {
        let dim = qubits.dim();
        Self::new(qubits, Matrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn qubits(&self) -> QubitSet {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal_real()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigen(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    pub fn purity(&self) -> f64 {
        self.matrix.mul(&self.matrix).trace().re
    }

    /// Convex combination `p·self + (1-p)·other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        crate::error::check_probability("p", p)?;
        Self::new(self.qubits, self.matrix.scale_real(p).add(&other.matrix.scale_real(1.0 - p)))
    }

    /// Probability of qubit `q` being found in `|0⟩`.
    pub fn marginal_zero(&self, q: Qubit) -> Result<f64> {
        let shift = self.qubits.shift_of(q).ok_or(Error::MissingQubit(q))?;
        Ok((0..self.dim()).filter(|i| (i >> shift) & 1 == 0).map(|i| self.matrix[(i, i)].re).sum())
    }

    /// Renormalizes after accumulated round-off.
    fn renormalized(qubits: QubitSet, matrix: Matrix) -> DensityMatrix {
        let tr = matrix.trace().re;
        let m = matrix.scale_real(1.0 / tr);
        let n = m.dim();
        let m = Matrix::from_fn(n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        DensityMatrix { qubits, matrix: m }
    }
}

/// Unitary acting on a subset of register qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    unitary: Matrix,
    targets: QubitSet,
}

impl GateOp {
    pub fn new(unitary: Matrix, targets: QubitSet) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptySelection);
        }
        if unitary.dim() != targets.dim() {
            return Err(Error::DimensionMismatch { expected: targets.dim(), actual: unitary.dim() });
        }
        let err = unitary.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self { unitary, targets })
    }

    pub fn identity(targets: QubitSet) -> Self {
        Self { unitary: Matrix::identity(targets.dim()), targets }
    }

    pub fn unitary(&self) -> &Matrix {
        &self.unitary
    }

    pub fn targets(&self) -> QubitSet {
        self.targets
    }

    /// Product `self · other` on the union of both target sets.
    pub fn then(&self, other: &GateOp) -> GateOp {
        let targets = self.targets.union(other.targets);
        let a = embed(&self.unitary, self.targets, targets).expect("subset");
        let b = embed(&other.unitary, other.targets, targets).expect("subset");
        GateOp { unitary: b.mul(&a), targets }
    }

    pub fn inverse(&self) -> GateOp {
        GateOp { unitary: self.unitary.adjoint(), targets: self.targets }
    }

    pub fn embedded(&self, qubits: QubitSet) -> Result<Matrix> {
        embed(&self.unitary, self.targets, qubits)
    }
}

/// Trace-preserving completely positive map in Kraus form.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Matrix>,
    targets: QubitSet,
}

impl KrausChannel {
    pub fn new(operators: Vec<Matrix>, targets: QubitSet) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptySelection);
        }
        if operators.is_empty() {
            return Err(Error::NotTracePreserving(1.0));
        }
        let dim = targets.dim();
        if let Some(k) = operators.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: k.dim() });
        }
        let err = completeness_error(&operators);
        if err > TP_TOL {
            return Err(Error::NotTracePreserving(err));
        }
        Ok(Self { operators, targets })
    }

    pub fn identity(targets: QubitSet) -> Self {
        Self { operators: alloc::vec![Matrix::identity(targets.dim())], targets }
    }

    pub fn from_gate(gate: &GateOp) -> Self {
        Self { operators: alloc::vec![gate.unitary.clone()], targets: gate.targets }
    }

    /// `(1-p)·U ρ U† + p·V ρ V†`.
    pub fn mixture(first: &GateOp, second: &GateOp, p: f64) -> Result<Self> {
        crate::error::check_probability("p", p)?;
        let targets = first.targets.union(second.targets);
        let a = first.embedded(targets)?;
        let b = second.embedded(targets)?;
        let mut operators = Vec::with_capacity(2);
        if p < 1.0 {
            operators.push(a.scale_real(math::sqrt(1.0 - p)));
        }
        if p > 0.0 {
            operators.push(b.scale_real(math::sqrt(p)));
        }
        Self::new(operators, targets)
    }

    pub fn operators(&self) -> &[Matrix] {
        &self.operators
    }

    pub fn targets(&self) -> QubitSet {
        self.targets
    }
}

fn completeness_error(ops: &[Matrix]) -> f64 {
    let dim = ops[0].dim();
    let mut sum = Matrix::zeros(dim);
    for k in ops {
        sum.add_assign(&k.adjoint().mul(k));
    }
    sum.max_abs_diff(&Matrix::identity(dim))
}

/// Labelled complete set of orthogonal projectors.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    projectors: Vec<(String, Matrix)>,
    targets: QubitSet,
}

impl ProjectorSet {
    pub fn new(projectors: Vec<(String, Matrix)>, targets: QubitSet) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::IncompleteProjectors(1.0));
        }
        let dim = targets.dim();
        let mut sum = Matrix::zeros(dim);
        let mut err: f64 = 0.0;
        for (i, (_, p)) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: p.dim() });
            }
            sum.add_assign(p);
            err = err.max(p.hermiticity_error());
            for (j, (_, q)) in projectors.iter().enumerate() {
                let expected = if i == j { p.clone() } else { Matrix::zeros(dim) };
                err = err.max(p.mul(q).max_abs_diff(&expected));
            }
        }
        err = err.max(sum.max_abs_diff(&Matrix::identity(dim)));
        if err > PROJECTOR_TOL {
            return Err(Error::IncompleteProjectors(err));
        }
        Ok(Self { projectors, targets })
    }

    /// Even/odd two-qubit parity projectors on the nuclear qubits.
    pub fn parity() -> Self {
        let even = Matrix::from_real_diagonal(&[1.0, 0.0, 0.0, 1.0]);
        let odd = Matrix::from_real_diagonal(&[0.0, 1.0, 1.0, 0.0]);
        Self::new(alloc::vec![("even".to_string(), even), ("odd".to_string(), odd)], QubitSet::NUCLEAR)
            .expect("parity projectors are complete")
    }

    /// Computational-basis projectors on `targets`, labelled by bit strings.
    pub fn computational(targets: QubitSet) -> Self {
        let dim = targets.dim();
        let width = targets.len();
        let projectors = (0..dim)
            .map(|k| {
                let mut label = String::with_capacity(width);
                for b in (0..width).rev() {
                    label.push(if (k >> b) & 1 == 1 { '1' } else { '0' });
                }
                let mut p = Matrix::zeros(dim);
                p[(k, k)] = ONE;
                (label, p)
            })
            .collect();
        Self::new(projectors, targets).expect("basis projectors are complete")
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.projectors.iter().map(|(l, _)| l.as_str())
    }

    pub fn targets(&self) -> QubitSet {
        self.targets
    }

    fn get(&self, label: &str) -> Result<&Matrix> {
        self.projectors
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }
}

/// Labelled generalized measurement: each outcome owns a list of Kraus
/// operators, and all outcomes together are trace preserving.
#[derive(Clone, Debug)]
pub struct Instrument {
    outcomes: Vec<(String, Vec<Matrix>)>,
    targets: QubitSet,
}

impl Instrument {
    pub fn new(outcomes: Vec<(String, Vec<Matrix>)>, targets: QubitSet) -> Result<Self> {
        let all: Vec<Matrix> = outcomes.iter().flat_map(|(_, ks)| ks.iter().cloned()).collect();
        if all.is_empty() {
            return Err(Error::NotTracePreserving(1.0));
        }
        let dim = targets.dim();
        if let Some(k) = all.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: k.dim() });
        }
        let err = completeness_error(&all);
        if err > TP_TOL {
            return Err(Error::NotTracePreserving(err));
        }
        Ok(Self { outcomes, targets })
    }

    pub fn targets(&self) -> QubitSet {
        self.targets
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    fn get(&self, label: &str) -> Result<&[Matrix]> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, k)| k.as_slice())
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }
}

/// A conditioned measurement result: the outcome, its probability and the
/// normalized post-measurement state.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedOutcome {
    pub label: String,
    pub probability: f64,
    pub post_state: DensityMatrix,
}

/// `a ⊗ b`; every qubit of `a` must precede every qubit of `b` in layout order.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    if a.qubits.len() + b.qubits.len() > 3 {
        return Err(Error::DimensionOverflow);
    }
    let last_a = a.qubits.iter().last().expect("non-empty");
    let first_b = b.qubits.iter().next().expect("non-empty");
    if last_a >= first_b {
        return Err(Error::QubitOrder);
    }
    Ok(DensityMatrix::renormalized(a.qubits.union(b.qubits), a.matrix.kron(&b.matrix)))
}

/// `U ρ U†` with `U` embedded by identity on the non-target qubits.
pub fn apply_unitary(rho: &DensityMatrix, gate: &GateOp) -> Result<DensityMatrix> {
    let u = gate.embedded(rho.qubits)?;
    Ok(DensityMatrix::renormalized(rho.qubits, u.sandwich(&rho.matrix)))
}

/// `Σ K ρ K†`.
pub fn apply_channel(rho: &DensityMatrix, channel: &KrausChannel) -> Result<DensityMatrix> {
    let mut out = Matrix::zeros(rho.dim());
    for k in &channel.operators {
        let k = embed(k, channel.targets, rho.qubits)?;
        out.add_assign(&k.sandwich(&rho.matrix));
    }
    Ok(DensityMatrix::renormalized(rho.qubits, out))
}

fn conditioned(rho: &DensityMatrix, ops: &[Matrix], targets: QubitSet, label: &str) -> Result<HeraldedOutcome> {
    let mut out = Matrix::zeros(rho.dim());
    for k in ops {
        let k = embed(k, targets, rho.qubits)?;
        out.add_assign(&k.sandwich(&rho.matrix));
    }
    let probability = out.trace().re;
    if probability < IMPOSSIBLE_TOL {
        return Err(Error::ImpossibleOutcome { label: label.to_string(), probability });
    }
    Ok(HeraldedOutcome {
        label: label.to_string(),
        probability,
        post_state: DensityMatrix::renormalized(rho.qubits, out),
    })
}

/// Projective measurement conditioned on outcome `keep`.
pub fn measure_herald(rho: &DensityMatrix, projectors: &ProjectorSet, keep: &str) -> Result<HeraldedOutcome> {
    let p = projectors.get(keep)?;
    conditioned(rho, core::slice::from_ref(p), projectors.targets, keep)
}

/// Generalized measurement conditioned on outcome `keep`.
pub fn measure_outcome(rho: &DensityMatrix, instrument: &Instrument, keep: &str) -> Result<HeraldedOutcome> {
    let ops = instrument.get(keep)?;
    conditioned(rho, ops, instrument.targets, keep)
}

/// Unnormalized probabilities of every outcome of `instrument`.
pub fn outcome_probabilities(rho: &DensityMatrix, instrument: &Instrument) -> Result<Vec<(String, f64)>> {
    instrument
        .outcomes
        .iter()
        .map(|(label, ops)| {
            let mut p = 0.0;
            for k in ops {
                let k = embed(k, instrument.targets, rho.qubits)?;
                p += k.sandwich(&rho.matrix).trace().re;
            }
            Ok((label.clone(), p))
        })
        .collect()
}

/// `tr(P ρ)` for every projector in the set.
pub fn projector_probabilities(rho: &DensityMatrix, projectors: &ProjectorSet) -> Result<Vec<(String, f64)>> {
    projectors
        .projectors
        .iter()
        .map(|(label, p)| {
            let p = embed(p, projectors.targets, rho.qubits)?;
            Ok((label.clone(), p.mul(&rho.matrix).trace().re))
        })
        .collect()
}

/// Reduced state on `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: QubitSet) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(q) = keep.iter().find(|q| !rho.qubits.contains(*q)) {
        return Err(Error::MissingQubit(q));
    }
    if keep == rho.qubits {
        return Ok(rho.clone());
    }
    let split = IndexSplit::new(keep, rho.qubits);
    let traced = rho.qubits.difference(keep).dim();
    let m = Matrix::from_fn(keep.dim(), |i, j| {
        (0..traced).map(|r| rho.matrix[(split.compose(i, r), split.compose(j, r))]).sum()
    });
    Ok(DensityMatrix::renormalized(keep, m))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &DensityMatrix, target: &[C64]) -> Result<f64> {
    if target.len() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: target.len() });
    }
    let norm = target.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::UnnormalizedTarget(norm));
    }
    let rho_psi = rho.matrix.apply(target);
    Ok(target.iter().zip(&rho_psi).map(|(a, b)| a.conj() * b).sum::<C64>().re)
}
