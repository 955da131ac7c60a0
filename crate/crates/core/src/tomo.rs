//! Estimation: two-qubit state tomography, projection onto physical states,
//! correlation and CHSH statistics, sinusoid fits and the visibility bound on
//! Bell-state fidelity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_probability, Error, Result};
use crate::linalg::{from_eigen, hermitian_eigen, invert_real, Matrix, C64, ONE, ZERO};
use crate::math;
use crate::noise::{confusion_from_readout_model, ReadoutModel};
use crate::protocol::{
    basis_sweep, nuclear_populations, readout_distribution, rotate_to_bases, sample_readout, substream, BellLabel,
    ChshAngles, ChshAssignment, MeasurementBasis, Mode,
};
use crate::qstate::{fidelity, DensityMatrix, QubitSet};

/// A value with its one-sigma standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Correlation `E` from outcome counts `[n00, n01, n10, n11]` with the
    /// binomial error `sqrt((1 - E²)/N)`.
    pub fn correlation_from_counts(counts: &[u64; 4]) -> Self {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Self::new(0.0, 1.0);
        }
        let nf = n as f64;
        let e = (counts[0] as f64 + counts[3] as f64 - counts[1] as f64 - counts[2] as f64) / nf;
        Self::new(e, math::sqrt((1.0 - e * e).max(0.0) / nf))
    }

    /// Binomial proportion `k/n` with error `sqrt(p(1-p)/n)`.
    pub fn proportion(k: u64, n: u64) -> Self {
        if n == 0 {
            return Self::new(0.0, 1.0);
        }
        let p = k as f64 / n as f64;
        Self::new(p, math::sqrt(p * (1.0 - p) / n as f64))
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x.is_nan() || x < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(sum));
    }
    Ok(())
}

/// `E = P(00) + P(11) - P(01) - P(10)`.
pub fn correlation_e(p: &[f64; 4]) -> Result<f64> {
    check_distribution(p)?;
    Ok((p[0] + p[3] - p[1] - p[2]).clamp(-1.0, 1.0))
}

/// Correlations of the four setting pairs and the combined CHSH value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshResult {
    pub angles: ChshAngles,
    /// `correlations[i][j]` is `E(phi[i], theta[j])`.
    pub correlations: [[Estimate; 2]; 2],
    pub s: Estimate,
    pub assignment: ChshAssignment,
}

/// `S = E(φ1,θ1) − E(φ1,θ2) − E(φ2,θ1) − E(φ2,θ2)` under `assignment`, with
/// the four errors added in quadrature.
pub fn chsh_s(angles: ChshAngles, correlations: [[Estimate; 2]; 2], assignment: ChshAssignment) -> ChshResult {
    let values = correlations.map(|row| row.map(|e| e.value));
    let var: f64 = correlations.iter().flatten().map(|e| e.stderr * e.stderr).sum();
    ChshResult { angles, correlations, s: Estimate::new(assignment.combine(&values), math::sqrt(var)), assignment }
}

/// Mean of `|S|` over several runs, errors combined in quadrature.
pub fn mean_abs_s(results: &[ChshResult]) -> Estimate {
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.s.value.abs()).sum::<f64>() / n;
    let var = results.iter().map(|r| r.s.stderr * r.s.stderr).sum::<f64>() / (n * n);
    Estimate::new(mean, math::sqrt(var))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix::identity(2),
            Pauli::X => Matrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]]),
            Pauli::Y => Matrix::from_rows(&[[ZERO, -i], [i, ZERO]]),
            Pauli::Z => Matrix::from_real_diagonal(&[1.0, -1.0]),
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn basis(self) -> MeasurementBasis {
        match self {
            Pauli::X => MeasurementBasis::X,
            Pauli::Y => MeasurementBasis::Y,
            Pauli::I | Pauli::Z => MeasurementBasis::Z,
        }
    }

    pub fn symbol(self) -> &'static str {
        ["I", "X", "Y", "Z"][self.index()]
    }
}

/// The 15 non-trivial two-qubit Pauli products in the order used by
/// expectation vectors: `(a, b)` at index `4a + b - 1`.
pub fn pauli_labels() -> [(Pauli, Pauli); 15] {
    core::array::from_fn(|k| (Pauli::ALL[(k + 1) / 4], Pauli::ALL[(k + 1) % 4]))
}

/// One local measurement setting of the tomography.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TomographySetting {
    pub c: Pauli,
    pub n: Pauli,
}

impl TomographySetting {
    pub fn bases(self) -> (MeasurementBasis, MeasurementBasis) {
        (self.c.basis(), self.n.basis())
    }
}

/// All pairs from {X, Y, Z}², C-major.
pub fn tomography_settings() -> [TomographySetting; 9] {
    const P: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    core::array::from_fn(|k| TomographySetting { c: P[k / 3], n: P[k % 3] })
}

/// Pauli expectations from the outcome distributions of the nine settings.
/// Single-qubit terms are averaged over the three settings that contain them.
pub fn expectations_from_distributions(dists: &[[f64; 4]; 9]) -> [f64; 15] {
    let mut sums = [0.0; 16];
    let mut counts = [0u32; 16];
    for (setting, p) in tomography_settings().iter().zip(dists) {
        let (a, b) = (setting.c.index(), setting.n.index());
        let mut corr = 0.0;
        let mut c_only = 0.0;
        let mut n_only = 0.0;
        for (o, &prob) in p.iter().enumerate() {
            let sc = if o & 2 == 0 { 1.0 } else { -1.0 };
            let sn = if o & 1 == 0 { 1.0 } else { -1.0 };
            corr += sc * sn * prob;
            c_only += sc * prob;
            n_only += sn * prob;
        }
        for (k, v) in [(4 * a + b, corr), (4 * a, c_only), (b, n_only)] {
            sums[k] += v;
            counts[k] += 1;
        }
    }
    core::array::from_fn(|k| sums[k + 1] / counts[k + 1] as f64)
}

fn pauli_product(a: Pauli, b: Pauli) -> Matrix {
    a.matrix().kron(&b.matrix())
}

/// `tr(ρ σ_a ⊗ σ_b)` for all 15 products.
pub fn exact_expectations(rho: &DensityMatrix) -> Result<[f64; 15]> {
    if rho.qubits() != QubitSet::NUCLEAR {
        return Err(Error::Precondition("tomography acts on the nuclear pair"));
    }
    let labels = pauli_labels();
    Ok(core::array::from_fn(|k| {
        let (a, b) = labels[k];
        pauli_product(a, b).mul(rho.matrix()).trace().re
    }))
}

/// `ρ = (I + Σ e_k σ_k) / 4`. The result is Hermitian with unit trace but
/// may have negative eigenvalues.
pub fn linear_inversion(expectations: &[f64; 15]) -> Result<DensityMatrix> {
    if let Some(&e) = expectations.iter().find(|e| e.is_nan() || e.abs() > 1.0 + 1e-9) {
        return Err(Error::OutOfRange { name: "expectation", value: e });
    }
    invert(expectations)
}

/// Inversion without the range check: mitigated finite-count estimates may
/// leave [-1, 1] and are kept unbiased.
fn invert(expectations: &[f64; 15]) -> Result<DensityMatrix> {
    let mut m = Matrix::identity(4);
    for ((a, b), e) in pauli_labels().iter().zip(expectations) {
        m.add_assign(&pauli_product(*a, *b).scale_real(*e));
    }
    DensityMatrix::new(QubitSet::NUCLEAR, m.scale_real(0.25))
}

/// Closest unit-trace positive semidefinite matrix in Frobenius norm:
/// negative eigenvalues are zeroed and their weight is spread uniformly
/// over the remaining ones, repeating until all are non-negative.
pub fn project_physical(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (mut values, vectors) = hermitian_eigen(rho.matrix());
    let n = values.len();
    let mut i = n;
    let mut acc = 0.0;
    while i > 0 && values[i - 1] + acc / (i as f64) < 0.0 {
        acc += values[i - 1];
        values[i - 1] = 0.0;
        i -= 1;
    }
    if i == 0 {
        return Err(Error::InvalidState("trace must be positive"));
    }
    for v in values.iter_mut().take(i) {
        *v += acc / i as f64;
    }
    DensityMatrix::from_unnormalized(rho.qubits(), from_eigen(&values, &vectors))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TomographyMethod {
    LinearInversion,
    PhysicalProjection,
}

/// Reconstructed two-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyEstimate {
    /// The estimate selected by `method`.
    pub rho_est: DensityMatrix,
    pub rho_linear: DensityMatrix,
    pub method: TomographyMethod,
    /// `None` in exact mode.
    pub counts_per_setting: Option<u64>,
    /// Fidelity of `rho_est` with the target. The error is the linear
    /// propagation of the multinomial counting error of the inversion.
    pub fidelity_vs_target: Estimate,
    pub fidelity_linear: Estimate,
    /// Observed (unmitigated) distributions per setting.
    pub observed: [[f64; 4]; 9],
    /// Counting errors of the real and imaginary parts of the linear
    /// estimate's elements; zero in exact mode.
    pub stderr_real: [[f64; 4]; 4],
    pub stderr_imag: [[f64; 4]; 4],
}

/// Measures `state` in all nine settings through `readout` and reconstructs
/// it. With `mitigate`, each observed distribution is corrected with the
/// inverse of the readout confusion matrix before inversion.
pub fn tomography(
    state: &DensityMatrix,
    target: &[C64; 4],
    readout: &ReadoutModel,
    mitigate: bool,
    method: TomographyMethod,
    mode: Mode,
) -> Result<TomographyEstimate> {
    let settings = tomography_settings();
    let mut observed = [[0.0; 4]; 9];
    for (k, setting) in settings.iter().enumerate() {
        let (bc, bn) = setting.bases();
        let rotated = rotate_to_bases(state, bc, bn)?;
        observed[k] = match mode {
            Mode::Exact => readout_distribution(&rotated, readout)?,
            Mode::MonteCarlo { shots: 0, .. } => return Err(Error::Precondition("at least one shot per setting")),
            Mode::MonteCarlo { shots, seed } => {
                let pops = nuclear_populations(&rotated)?;
                let mut rng = substream(seed, k as u64);
                let mut counts = [0u64; 4];
                for _ in 0..shots {
                    counts[sample_readout(&pops, readout, &mut rng)?.index()] += 1;
                }
                counts.map(|c| c as f64 / shots as f64)
            }
        };
    }
    let unmix = if mitigate {
        confusion_from_readout_model(readout)?.inverse()?
    } else {
        core::array::from_fn(|j| core::array::from_fn(|i| if i == j { 1.0 } else { 0.0 }))
    };
    let corrected: [[f64; 4]; 9] = observed.map(|q| core::array::from_fn(|i| (0..4).map(|j| unmix[j][i] * q[j]).sum()));
    let rho_linear = invert(&expectations_from_distributions(&corrected))?;
    let rho_est = match method {
        TomographyMethod::LinearInversion => rho_linear.clone(),
        TomographyMethod::PhysicalProjection => project_physical(&rho_linear)?,
    };

    let shots = match mode {
        Mode::Exact => None,
        Mode::MonteCarlo { shots, .. } => Some(shots as f64),
    };
    let stderr_of = |obs: &Matrix| -> f64 {
        let Some(n) = shots else { return 0.0 };
        let w = observable_weights(obs, &unmix);
        let var: f64 = (0..9)
            .map(|s| {
                let m1: f64 = (0..4).map(|j| w[s][j] * observed[s][j]).sum();
                let m2: f64 = (0..4).map(|j| w[s][j] * w[s][j] * observed[s][j]).sum();
                (m2 - m1 * m1).max(0.0) / n
            })
            .sum();
        math::sqrt(var)
    };
    let stderr = stderr_of(&Matrix::outer(target));
    let mut stderr_real = [[0.0; 4]; 4];
    let mut stderr_imag = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            // tr(ρ |j⟩⟨i|) = ρ_ij
            let mut re = Matrix::zeros(4);
            re[(j, i)] += C64::new(0.5, 0.0);
            re[(i, j)] += C64::new(0.5, 0.0);
            stderr_real[i][j] = stderr_of(&re);
            let mut im = Matrix::zeros(4);
            im[(j, i)] += C64::new(0.0, -0.5);
            im[(i, j)] += C64::new(0.0, 0.5);
            stderr_imag[i][j] = stderr_of(&im);
        }
    }
    Ok(TomographyEstimate {
        fidelity_vs_target: Estimate::new(fidelity(&rho_est, target)?, stderr),
        fidelity_linear: Estimate::new(fidelity(&rho_linear, target)?, stderr),
        rho_est,
        rho_linear,
        method,
        counts_per_setting: match mode {
            Mode::Exact => None,
            Mode::MonteCarlo { shots, .. } => Some(shots),
        },
        observed,
        stderr_real,
        stderr_imag,
    })
}

/// Coefficients `w[s][j]` such that `tr(O ρ)` of the linear-inversion
/// estimate equals `tr(O)/4 + Σ w[s][j] q[s][j]` for observed distributions
/// `q` and Hermitian `O`.
fn observable_weights(obs: &Matrix, unmix: &[[f64; 4]; 4]) -> [[f64; 4]; 9] {
    let t: [f64; 15] = core::array::from_fn(|k| {
        let (a, b) = pauli_labels()[k];
        pauli_product(a, b).mul(obs).trace().re
    });
    let mut w = [[0.0; 4]; 9];
    for s in 0..9 {
        for o in 0..4 {
            let mut unit = [[0.0; 4]; 9];
            unit[s][o] = 1.0;
            let e = expectations_from_distributions(&unit);
            let w_so: f64 = 0.25 * e.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>();
            for j in 0..4 {
                w[s][j] += unmix[j][o] * w_so;
            }
        }
    }
    w
}

/// Weighted least-squares fit of `y = offset + amplitude·cos(x − phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidFit {
    pub offset: Estimate,
    pub amplitude: Estimate,
    pub phase: Estimate,
    /// Coefficients of `cos x` and `sin x` in the linear parametrization.
    pub cos_coeff: Estimate,
    pub sin_coeff: Estimate,
    pub residuals: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
}

/// Fits a sinusoid of period 2π. Needs at least four points spanning at
/// least half a period. `y_err` of all zeros means unweighted, error-free
/// data; otherwise every error must be positive.
pub fn sinusoid_fit(xs: &[f64], ys: &[f64], y_err: &[f64]) -> Result<SinusoidFit> {
    if xs.len() != ys.len() || xs.len() != y_err.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), actual: ys.len().min(y_err.len()) });
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.len() < 4 || hi == lo {
        return Err(Error::DegenerateFit);
    }
    if hi - lo < PI - 1e-12 {
        return Err(Error::Precondition("fit points must span at least half a period"));
    }
    let unweighted = y_err.iter().all(|&e| e == 0.0);
    if !unweighted && y_err.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::OutOfRange { name: "y_err", value: y_err.iter().copied().fold(f64::INFINITY, f64::min) });
    }
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for ((&x, &y), &e) in xs.iter().zip(ys).zip(y_err) {
        let w = if unweighted { 1.0 } else { 1.0 / (e * e) };
        let row = [1.0, math::cos(x), math::sin(x)];
        for a in 0..3 {
            atb[a] += w * row[a] * y;
            for b in 0..3 {
                ata[3 * a + b] += w * row[a] * row[b];
            }
        }
    }
    let cov = invert_real(&ata, 3).ok_or(Error::DegenerateFit)?;
    let c: Vec<f64> = (0..3).map(|a| (0..3).map(|b| cov[3 * a + b] * atb[b]).sum()).collect();
    let cov = if unweighted { vec![0.0; 9] } else { cov };
    let se = |k: usize| math::sqrt(cov[4 * k].max(0.0));

    let residuals: Vec<f64> =
        xs.iter().zip(ys).map(|(&x, &y)| y - (c[0] + c[1] * math::cos(x) + c[2] * math::sin(x))).collect();
    let chi2 = if unweighted {
        residuals.iter().map(|r| r * r).sum()
    } else {
        residuals.iter().zip(y_err).map(|(r, e)| (r / e) * (r / e)).sum()
    };

    let amp = math::hypot(c[1], c[2]);
    let (s11, s22, s12) = (cov[4], cov[8], cov[5]);
    let (amp_err, phase_err) = if amp > 0.0 {
        let va = (c[1] * c[1] * s11 + c[2] * c[2] * s22 + 2.0 * c[1] * c[2] * s12) / (amp * amp);
        let vp = (c[2] * c[2] * s11 + c[1] * c[1] * s22 - 2.0 * c[1] * c[2] * s12) / (amp * amp * amp * amp);
        (math::sqrt(va.max(0.0)), math::sqrt(vp.max(0.0)))
    } else {
        (math::sqrt(s11.max(s22).max(0.0)), PI)
    };
    Ok(SinusoidFit {
        offset: Estimate::new(c[0], se(0)),
        amplitude: Estimate::new(amp, amp_err),
        phase: Estimate::new(math::atan2(c[2], c[1]), phase_err),
        cos_coeff: Estimate::new(c[1], se(1)),
        sin_coeff: Estimate::new(c[2], se(2)),
        residuals,
        chi2,
        dof: xs.len() - 3,
    })
}

/// Lower bound on the fidelity with Ψ± from the odd-parity population and
/// the parity-oscillation visibility `V`: `F ≥ pop_odd + V/2 − 1/2`.
///
/// `V` is the contrast `P_even(α=0) − P_even(α=π)` of a sweep with C along
/// `π + α` and N along −X, sign-flipped for Ψ−. The bound holds for every
/// positive semidefinite state since `|ρ_{00,11}| ≤ (ρ_{00,00} + ρ_{11,11})/2`.
pub fn visibility_fidelity_bound(pop_odd: f64, visibility: f64) -> Result<f64> {
    check_probability("pop_odd", pop_odd)?;
    check_probability("visibility", visibility)?;
    Ok(pop_odd + 0.5 * visibility - 0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityBound {
    pub pop_odd: f64,
    /// Signed visibility entering the bound.
    pub visibility: f64,
    pub bound: f64,
    pub fit: SinusoidFit,
}

/// Runs the parity sweep on a Ψ± state, fits it and evaluates
/// [`visibility_fidelity_bound`]. Probabilities are the readout-corrected
/// (ideal-readout) ones.
pub fn psi_visibility_bound(state: &DensityMatrix, which: BellLabel, alphas: &[f64]) -> Result<VisibilityBound> {
    let sign = match which {
        BellLabel::PsiPlus => 1.0,
        BellLabel::PsiMinus => -1.0,
        _ => return Err(Error::Precondition("visibility bound applies to the odd Bell states")),
    };
    let sweep = basis_sweep(state, alphas, MeasurementBasis::MINUS_X, None)?;
    let ys: Vec<f64> = sweep.iter().map(|p| p.p_even).collect();
    let fit = sinusoid_fit(alphas, &ys, &vec![0.0; alphas.len()])?;
    let visibility = (sign * 2.0 * fit.cos_coeff.value).clamp(0.0, 1.0);
    let p = nuclear_populations(state)?;
    let pop_odd = (p[1] + p[2]).clamp(0.0, 1.0);
    Ok(VisibilityBound { pop_odd, visibility, bound: visibility_fidelity_bound(pop_odd, visibility)?, fit })
}
