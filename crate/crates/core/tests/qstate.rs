mod common;

use common::*;
use nalgebra::DMatrix;
use paritybell_core::qstate::{
    apply_channel, apply_unitary, fidelity, measure_herald, partial_trace, projector_probabilities, tensor,
    ProjectorSet, PSD_TOL,
};
use paritybell_core::{linalg, DensityMatrix, GateOp, KrausChannel, Matrix, Qubit, QubitSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state(qubits: QubitSet, seed: u64, rank: usize) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    density(qubits, &random_state(qubits.dim(), rank, &mut rng))
}

fn random_unitary(dim: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // eigenvectors of a random Hermitian matrix form a unitary
    let h = random_state(dim, dim, &mut rng);
    let eig = nalgebra::SymmetricEigen::new(h);
    from_nalgebra(&eig.eigenvectors)
}

fn assert_valid(rho: &DensityMatrix) {
    assert!(rho.matrix().hermiticity_error() <= 1e-12);
    assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-12);
    assert!(rho.matrix().trace().im.abs() <= 1e-12);
    assert!(rho.min_eigenvalue() >= -PSD_TOL);
}

fn subsets() -> impl Strategy<Value = QubitSet> {
    (1u8..8).prop_map(|bits| {
        let qs: Vec<Qubit> = Qubit::ALL.iter().copied().filter(|q| bits & (4 >> (*q as u8)) != 0).collect();
        QubitSet::of(&qs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unitary_evolution_keeps_state_valid(seed in any::<u64>(), rank in 1usize..=8) {
        let rho = state(QubitSet::REGISTER, seed, rank);
        let u = GateOp::new(random_unitary(8, seed ^ 1), QubitSet::REGISTER).unwrap();
        assert_valid(&apply_unitary(&rho, &u).unwrap());
    }

    #[test]
    fn channels_keep_state_valid(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let rho = state(QubitSet::REGISTER, seed, 3);
        let u = GateOp::new(random_unitary(2, seed ^ 7), QubitSet::single(Qubit::N)).unwrap();
        let ch = KrausChannel::mixture(&u, &GateOp::identity(QubitSet::single(Qubit::N)), p).unwrap();
        assert_valid(&apply_channel(&rho, &ch).unwrap());
    }

    #[test]
    fn single_kraus_channel_equals_unitary(seed in any::<u64>()) {
        let rho = state(QubitSet::REGISTER, seed, 8);
        let u = GateOp::new(random_unitary(4, seed ^ 3), QubitSet::NUCLEAR).unwrap();
        let a = apply_unitary(&rho, &u).unwrap();
        let b = apply_channel(&rho, &KrausChannel::from_gate(&u)).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-14);
    }

    #[test]
    fn herald_probabilities_are_complete(seed in any::<u64>(), targets in subsets()) {
        let rho = state(QubitSet::REGISTER, seed, 2);
        let total: f64 = projector_probabilities(&rho, &ProjectorSet::computational(targets))
            .unwrap().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        let parity: f64 = projector_probabilities(&rho, &ProjectorSet::parity()).unwrap().iter().map(|(_, p)| p).sum();
        prop_assert!((parity - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn heralded_post_states_are_valid(seed in any::<u64>()) {
        let rho = state(QubitSet::REGISTER, seed, 4);
        for label in ["even", "odd"] {
            let h = measure_herald(&rho, &ProjectorSet::parity(), label).unwrap();
            assert_valid(&h.post_state);
        }
    }

    #[test]
    fn trace_of_tensor_returns_factor(seed in any::<u64>()) {
        let a = state(QubitSet::NUCLEAR, seed, 2);
        let b = state(QubitSet::single(Qubit::Ancilla), seed ^ 11, 2);
        let ab = tensor(&a, &b).unwrap();
        prop_assert!(partial_trace(&ab, QubitSet::NUCLEAR).unwrap().matrix().max_abs_diff(a.matrix()) <= 1e-12);
        prop_assert!(partial_trace(&ab, QubitSet::single(Qubit::Ancilla)).unwrap().matrix().max_abs_diff(b.matrix()) <= 1e-12);
    }

    #[test]
    fn fidelity_is_linear(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let r1 = state(QubitSet::NUCLEAR, seed, 4);
        let r2 = state(QubitSet::NUCLEAR, seed ^ 5, 1);
        let psi: Vec<_> = from_nalgebra(&random_state(4, 1, &mut ChaCha8Rng::seed_from_u64(seed ^ 9)))
            .as_slice().chunks(4).next().unwrap().to_vec();
        // first column of a rank-one projector, normalized
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<_> = psi.iter().map(|z| z / norm).collect();
        let mixed = r1.mix(&r2, p).unwrap();
        let lhs = fidelity(&mixed, &psi).unwrap();
        let rhs = p * fidelity(&r1, &psi).unwrap() + (1.0 - p) * fidelity(&r2, &psi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&lhs));
    }

    #[test]
    fn eigenvalues_match_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_state(8, 8, &mut rng) - random_state(8, 3, &mut rng);
        let (values, vectors) = linalg::hermitian_eigen(&from_nalgebra(&h));
        let mut reference: Vec<f64> = nalgebra::SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in values.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let back = linalg::from_eigen(&values, &vectors);
        prop_assert!(max_diff(&to_nalgebra(&back), &h) <= 1e-12);
    }
}

#[test]
fn partial_trace_matches_reference_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rho = random_state(8, 8, &mut rng);
    let ours = partial_trace(&density(QubitSet::REGISTER, &rho), QubitSet::NUCLEAR).unwrap();
    assert!(max_diff(&to_nalgebra(ours.matrix()), &trace_ancilla(&rho)) < 1e-14);
    // keep C and the ancilla: trace N by explicit index sums
    let keep = QubitSet::of(&[Qubit::C, Qubit::Ancilla]);
    let ours = partial_trace(&density(QubitSet::REGISTER, &rho), keep).unwrap();
    let reference = DMatrix::from_fn(4, 4, |i, j| {
        let (ci, ai) = (i >> 1, i & 1);
        let (cj, aj) = (j >> 1, j & 1);
        (0..2).map(|n| rho[(4 * ci + 2 * n + ai, 4 * cj + 2 * n + aj)]).sum()
    });
    assert!(max_diff(&to_nalgebra(ours.matrix()), &reference) < 1e-14);
}

#[test]
fn unitary_embedding_matches_kronecker_product() {
    let u = random_unitary(2, 17);
    let rho = random_state(8, 8, &mut ChaCha8Rng::seed_from_u64(3));
    let ours =
        apply_unitary(&density(QubitSet::REGISTER, &rho), &GateOp::new(u.clone(), QubitSet::single(Qubit::N)).unwrap())
            .unwrap();
    let full = kron(&[&eye(2), &to_nalgebra(&u), &eye(2)]);
    assert!(max_diff(&to_nalgebra(ours.matrix()), &sandwich(&full, &rho)) < 1e-14);
}
