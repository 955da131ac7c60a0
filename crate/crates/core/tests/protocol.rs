mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use common::*;
use paritybell_core::gates::NuclearState;
use paritybell_core::noise::{coherence_factor, ClickModel, NoiseModel, ReadoutModel};
use paritybell_core::protocol::*;
use paritybell_core::qstate::{fidelity, partial_trace, projector_probabilities, ProjectorSet};
use paritybell_core::tomo::correlation_e;
use paritybell_core::{DensityMatrix, Qubit, QubitSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels() -> impl Strategy<Value = BellLabel> {
    prop::sample::select(BellLabel::ALL.to_vec())
}

fn amplitudes(which: BellLabel) -> [f64; 4] {
    which.vector().map(|z| z.re)
}

fn readout_with(b: f64, d: f64) -> ReadoutModel {
    ReadoutModel { click: ClickModel::new(b, d).unwrap(), ..ReadoutModel::ideal() }
}

fn calibrated_readout() -> ReadoutModel {
    ReadoutModel {
        click: ClickModel::new(0.06, 0.0).unwrap(),
        probe_click: ClickModel::new(0.9497, 0.0258).unwrap(),
        probe_flip_error: 0.0,
        probe_order: [NuclearState::S11, NuclearState::S10, NuclearState::S00, NuclearState::S01],
        max_rounds: 1000,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noisy_preparation_matches_reference(
        which in labels(),
        eps in 0.0f64..0.3,
        b in 0.02f64..=1.0,
        dr in 0.0f64..0.5,
        q in 0.0f64..0.05,
        idle in 0.0f64..2e-3,
    ) {
        let noise = NoiseModel { eps_pi: eps, ancilla_flip_during_readout: q, idle_time: idle, ..NoiseModel::measured() };
        let readout = readout_with(b, b * dr);
        let ours = prepare_bell(which, &noise, &readout).unwrap();
        let params = Params {
            eps,
            b,
            d: b * dr,
            q,
            lambda_c: coherence_factor(idle, noise.t2star_c),
            lambda_n: coherence_factor(idle, noise.t2star_n),
        };
        let (reference, p1, p2) = prepare(which.pulse_axes(), which.parity() == Parity::Even, &params);
        prop_assert!(max_diff(&to_nalgebra(ours.final_state.matrix()), &reference) < 1e-12);
        prop_assert!((ours.success_probability - p1 * p2).abs() < 1e-12);
        let f = fidelity(&ours.final_state, &which.vector()).unwrap();
        prop_assert!((f - overlap(&reference, &amplitudes(which))).abs() < 1e-12);
    }

    #[test]
    fn heralded_bell_marginals_are_flat(which in labels(), alpha in -2.0 * PI..2.0 * PI) {
        let rho = prepare_bell(which, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap().final_state;
        for n_basis in [MeasurementBasis::Z, MeasurementBasis::MINUS_X, MeasurementBasis::Y] {
            let p = basis_sweep(&rho, &[alpha], n_basis, None).unwrap()[0];
            prop_assert!((p.p_c0 - 0.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn exact_distributions_are_valid(seed in any::<u64>(), phi in -PI..PI, theta in -PI..PI) {
        let rho = density(QubitSet::NUCLEAR, &random_state(4, 2, &mut ChaCha8Rng::seed_from_u64(seed)));
        let p = chsh_distribution(&rho, phi, theta, &calibrated_readout()).unwrap();
        prop_assert!(p.iter().all(|&x| x >= -1e-15));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn ideal_pipeline_is_exact() {
    for which in BellLabel::ALL {
        for b in [1.0, 0.06] {
            let r = prepare_bell(which, &NoiseModel::ideal(), &readout_with(b, 0.0)).unwrap();
            assert!((fidelity(&r.final_state, &which.vector()).unwrap() - 1.0).abs() < 1e-10);
            // init herald b/4 on I/8, parity herald b/2
            assert!((r.herald("init").unwrap().probability - b / 4.0).abs() < 1e-12);
            let label = format!("parity-{}", which.parity().name());
            assert!((r.herald(&label).unwrap().probability - b / 2.0).abs() < 1e-12);
            let (reference, _, _) = prepare(which.pulse_axes(), which.parity() == Parity::Even, &Params::ideal(b));
            assert!(max_diff(&to_nalgebra(r.final_state.matrix()), &reference) < 1e-12);
        }
    }
}

#[test]
fn parity_post_states_lie_in_the_selected_subspace() {
    for which in BellLabel::ALL {
        let sup = prepare_superposition(which, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let out =
                parity_measurement(&sup.register_state, parity, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap();
            assert!(out.warning.is_none());
            assert!((out.herald.probability - 0.5).abs() < 1e-12);
            let nuclear = partial_trace(&out.herald.post_state, QubitSet::NUCLEAR).unwrap();
            let probs = projector_probabilities(&nuclear, &ProjectorSet::parity()).unwrap();
            let inside = if parity == Parity::Even { probs[0].1 } else { probs[1].1 };
            assert!((inside - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn repeated_parity_measurement_is_nondestructive() {
    let ideal = (NoiseModel::ideal(), ReadoutModel::ideal());
    let noisy = NoiseModel { ancilla_flip_during_readout: 0.01, ..NoiseModel::ideal() };
    for which in BellLabel::ALL {
        let r = prepare_bell(which, &ideal.0, &ideal.1).unwrap();
        let again = parity_measurement(&r.register_state, which.parity(), &ideal.0, &ideal.1).unwrap();
        assert!((again.herald.probability - 1.0).abs() < 1e-12);

        let sup = prepare_superposition(which, &ideal.0, &ideal.1).unwrap();
        let (first, p) = parity_repeat(&sup.register_state, which.parity(), &ideal.0, &ideal.1).unwrap();
        assert!((first.herald.probability - 0.5).abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = parity_repeat(&sup.register_state, which.parity(), &noisy, &ideal.1).unwrap();
        assert!((p - 0.99).abs() < 1e-12);

        // through the full pipeline the init readout flip also leaves 1% of the wrong parity
        let r = prepare_bell(which, &noisy, &ideal.1).unwrap();
        let again = parity_measurement(&r.register_state, which.parity(), &noisy, &ideal.1).unwrap();
        assert!((again.herald.probability - (0.99 * 0.99 + 0.01 * 0.01)).abs() < 1e-12);
        assert!((again.warning.unwrap().population_zero - 0.01).abs() < 1e-12);
    }
}

#[test]
fn parity_measurement_warns_on_unprepared_ancilla() {
    let nuclear = BellLabel::PhiPlus.density_matrix();
    let zero = DensityMatrix::basis(QubitSet::single(Qubit::Ancilla), 0).unwrap();
    let reg = paritybell_core::qstate::tensor(&nuclear, &zero).unwrap();
    let out = parity_measurement(&reg, Parity::Even, &NoiseModel::ideal(), &ReadoutModel::ideal());
    match out {
        Ok(o) => assert!((o.warning.unwrap().population_zero - 1.0).abs() < 1e-12),
        Err(e) => assert!(matches!(e, paritybell_core::Error::ImpossibleOutcome { .. })),
    }
}

#[test]
fn ideal_chsh_reaches_tsirelson() {
    for which in BellLabel::ALL {
        let angles = ChshAngles::standard();
        let assignment = ChshAssignment::optimal(which, &angles).unwrap();
        let run =
            chsh_experiment(which, &angles, assignment, Mode::Exact, &NoiseModel::ideal(), &ReadoutModel::ideal())
                .unwrap();
        assert!((run.result.s.value - 2.0 * SQRT_2).abs() < 1e-9, "{which}: {}", run.result.s.value);
        assert_eq!(run.result.s.stderr, 0.0);
        assert!(run.records.is_empty());
    }
}

#[test]
fn correlations_follow_the_angle_sum() {
    let rho = BellLabel::PhiMinus.density_matrix();
    for (phi, theta) in [(0.3, 0.2), (PI / 4.0, 0.0), (1.0, -2.0)] {
        let e = correlation_e(&chsh_distribution(&rho, phi, theta, &ReadoutModel::ideal()).unwrap()).unwrap();
        assert!((e - f64::cos(phi + theta)).abs() < 1e-12);
    }
}

#[test]
fn random_states_respect_tsirelson_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ideal = ReadoutModel::ideal();
    for _ in 0..1000 {
        let rho = density(QubitSet::NUCLEAR, &random_state(4, 1 + rand::Rng::random_range(&mut rng, 0..4), &mut rng));
        let angles = ChshAngles {
            phi: [rand::Rng::random_range(&mut rng, -PI..PI), rand::Rng::random_range(&mut rng, -PI..PI)],
            theta: [rand::Rng::random_range(&mut rng, -PI..PI), rand::Rng::random_range(&mut rng, -PI..PI)],
        };
        for assignment in ChshAssignment::all() {
            let (r, _) = chsh_on_state(&rho, BellLabel::PhiPlus, &angles, assignment, Mode::Exact, &ideal).unwrap();
            assert!(r.s.value.abs() <= 2.0 * SQRT_2 + 1e-9);
        }
    }
}

#[test]
fn sampled_readout_agrees_with_exact_distribution() {
    let readout = calibrated_readout();
    let rho = prepare_bell(BellLabel::PsiPlus, &NoiseModel { eps_pi: 0.09, ..NoiseModel::measured() }, &readout)
        .unwrap()
        .final_state;
    let rotated = rotate_to_bases(&rho, MeasurementBasis::X, MeasurementBasis::Equatorial(0.7)).unwrap();
    let exact = readout_distribution(&rotated, &readout).unwrap();
    let pops = nuclear_populations(&rotated).unwrap();
    let n = 100_000u64;
    let counts = sample_counts(&pops, &readout, n, &mut substream(9, 0)).unwrap();
    for (c, p) in counts.iter().zip(exact) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - p).abs() <= 3.0 * sigma, "{c} vs {p}");
    }
}

#[test]
fn sampled_chsh_agrees_with_exact() {
    let noise = NoiseModel { eps_pi: 0.09, ..NoiseModel::measured() };
    let readout = calibrated_readout();
    let angles = ChshAngles::standard();
    for which in BellLabel::ALL {
        let a = ChshAssignment::optimal(which, &angles).unwrap();
        let exact = chsh_experiment(which, &angles, a, Mode::Exact, &noise, &readout).unwrap();
        let mc =
            chsh_experiment(which, &angles, a, Mode::MonteCarlo { shots: 20_000, seed: 5 }, &noise, &readout).unwrap();
        assert_eq!(mc.records.len(), 80_000);
        for i in 0..2 {
            for j in 0..2 {
                let (e, m) = (exact.result.correlations[i][j], mc.result.correlations[i][j]);
                assert!((e.value - m.value).abs() <= 3.0 * m.stderr, "{which} {i}{j}: {} vs {}", e.value, m.value);
            }
        }
        assert!((exact.result.s.value - mc.result.s.value).abs() <= 3.0 * mc.result.s.stderr);
    }
}

#[test]
fn identical_seeds_give_identical_records() {
    let noise = NoiseModel { eps_pi: 0.09, ..NoiseModel::measured() };
    let readout = calibrated_readout();
    let angles = ChshAngles::standard();
    let a = ChshAssignment::optimal(BellLabel::PhiMinus, &angles).unwrap();
    let run = |seed| {
        chsh_experiment(BellLabel::PhiMinus, &angles, a, Mode::MonteCarlo { shots: 300, seed }, &noise, &readout)
            .unwrap()
    };
    let (x, y, z) = (run(11), run(11), run(12));
    assert_eq!(x.records, y.records);
    assert_eq!(x.result, y.result);
    assert_ne!(x.records, z.records);
}

#[test]
fn odd_sweeps_are_in_antiphase() {
    let alphas: Vec<f64> = (0..24).map(|k| 2.0 * PI * k as f64 / 24.0).collect();
    let plus = prepare_bell(BellLabel::PsiPlus, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap().final_state;
    let minus = prepare_bell(BellLabel::PsiMinus, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap().final_state;
    let a = basis_sweep(&plus, &alphas, MeasurementBasis::MINUS_X, None).unwrap();
    let b = basis_sweep(&minus, &alphas, MeasurementBasis::MINUS_X, None).unwrap();
    for (p, m) in a.iter().zip(&b) {
        assert!((p.p_even + m.p_even - 1.0).abs() < 1e-12);
        assert!((p.p_even - (1.0 + p.alpha.cos()) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn even_sweep_has_unit_visibility() {
    let alphas: Vec<f64> = (0..24).map(|k| 2.0 * PI * k as f64 / 24.0).collect();
    let rho = prepare_bell(BellLabel::PhiPlus, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap().final_state;
    let sweep = basis_sweep(&rho, &alphas, MeasurementBasis::MINUS_X, None).unwrap();
    let max = sweep.iter().map(|p| p.p_even).fold(f64::MIN, f64::max);
    let min = sweep.iter().map(|p| p.p_even).fold(f64::MAX, f64::min);
    assert!((max - min - 1.0).abs() < 1e-12);
}

#[test]
fn discrimination_labels_odd_states() {
    let noise = NoiseModel { eps_pi: 0.09, ..NoiseModel::measured() };
    let readout = readout_with(0.06, 0.0);
    for which in [BellLabel::PsiPlus, BellLabel::PsiMinus] {
        let ideal = bell_discriminate(&which.density_matrix(), &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap();
        assert_eq!(ideal.label, Some(which));
        assert!((ideal.p_odd_z - 1.0).abs() < 1e-12);
        let rho = prepare_bell(which, &noise, &readout).unwrap().final_state;
        assert_eq!(bell_discriminate(&rho, &noise, &readout).unwrap().label, Some(which));
    }
    let mixed = DensityMatrix::maximally_mixed(QubitSet::NUCLEAR).unwrap();
    assert_eq!(bell_discriminate(&mixed, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap().label, None);
}

#[test]
fn ideal_rabi_follows_cosine_squared() {
    let angles: Vec<f64> = (0..=32).map(|k| 4.0 * PI * k as f64 / 32.0).collect();
    for target in [Qubit::C, Qubit::N] {
        let p = rabi_sweep(target, &angles, &NoiseModel::ideal(), &ReadoutModel::ideal()).unwrap();
        for (theta, p0) in angles.iter().zip(p) {
            assert!((p0 - (theta / 2.0).cos().powi(2)).abs() < 1e-12);
        }
    }
    assert!(rabi_sweep(Qubit::Ancilla, &[0.0], &NoiseModel::ideal(), &ReadoutModel::ideal()).is_err());
}

#[test]
fn readout_of_bell_state_through_ideal_model() {
    let p = readout_distribution(&BellLabel::PsiMinus.density_matrix(), &ReadoutModel::ideal()).unwrap();
    let s = FRAC_1_SQRT_2 * FRAC_1_SQRT_2;
    assert!((p[1] - s).abs() < 1e-12 && (p[2] - s).abs() < 1e-12);
}

#[test]
fn readout_without_clicks_fails() {
    let readout = ReadoutModel {
        probe_click: ClickModel { p_click_bright: 0.0, p_click_dark: 0.0 },
        max_rounds: 3,
        ..ReadoutModel::ideal()
    };
    assert!(readout_distribution(&BellLabel::PhiPlus.density_matrix(), &readout).is_err());
}
