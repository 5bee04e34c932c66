use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use qfeedback::channels::{dephase, measure, phase_flip};
use qfeedback::photonic::{gate_measurement, ppbs_conditional, MeterState, Ppbs};
use qfeedback::protocol::{
    avg_fidelity_analytic, avg_fidelity_opt, chi_opt, control_map, eta_opt, fidelity_dn,
    fidelity_h, run_protocol_exact, ProtocolParams,
};
use qfeedback::qubit::{
    density_from_bloch, make_input_state, max_abs, rotation_y, BlochVector, QubitState, Sign,
};
use qfeedback::tomography::{expected_ensemble, linear_inversion, Rounding};

fn bloch_ball() -> impl Strategy<Value = BlochVector> {
    (0.0..=1.0f64, 0.0..=std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(
        |(r, pol, az)| {
            BlochVector::new(
                r * pol.sin() * az.cos(),
                r * pol.sin() * az.sin(),
                r * pol.cos(),
            )
        },
    )
}

fn state() -> impl Strategy<Value = QubitState> {
    bloch_ball().prop_map(|r| density_from_bloch(&r).unwrap())
}

fn sign() -> impl Strategy<Value = Sign> {
    prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]
}

proptest! {
    #[test]
    fn bloch_round_trip(r in bloch_ball()) {
        let back = density_from_bloch(&r).unwrap().bloch();
        prop_assert!((back.x - r.x).abs() < 1e-12);
        prop_assert!((back.y - r.y).abs() < 1e-12);
        prop_assert!((back.z - r.z).abs() < 1e-12);
    }

    #[test]
    fn rotations_preserve_spectrum(rho in state(), eta in -3.2..3.2f64, s in sign()) {
        let out = rho.apply_unitary(&rotation_y(eta, s));
        let (a, b) = (rho.eigenvalues(), out.eigenvalues());
        prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn dephasing_composes(rho in state(), p1 in 0.0..=0.5f64, p2 in 0.0..=0.5f64) {
        let twice = dephase(&dephase(&rho, p1).unwrap(), p2).unwrap();
        let once = dephase(&rho, p1 + p2 - 2.0 * p1 * p2).unwrap();
        prop_assert!(max_abs(&(twice.matrix() - once.matrix())) < 1e-12);
    }

    #[test]
    fn dephasing_contracts_transverse_components(r in bloch_ball(), p in 0.0..=0.5f64) {
        let out = dephase(&density_from_bloch(&r).unwrap(), p).unwrap().bloch();
        let k = 1.0 - 2.0 * p;
        prop_assert!((out.x - k * r.x).abs() < 1e-12);
        prop_assert!((out.y - k * r.y).abs() < 1e-12);
        prop_assert!((out.z - r.z).abs() < 1e-12);
    }

    #[test]
    fn forgetting_the_outcome_scales_coherence_by_sin_chi(rho in state(), chi in 0.0..=FRAC_PI_2) {
        let (a, b) = measure(&rho, chi).unwrap();
        let avg = a.post_state.matrix().scale(a.probability) + b.post_state.matrix().scale(b.probability);
        let m = rho.matrix();
        prop_assert!((a.probability + b.probability - 1.0).abs() < 1e-12);
        prop_assert!((avg[(0, 0)] - m[(0, 0)]).norm() < 1e-12);
        prop_assert!((avg[(1, 1)] - m[(1, 1)]).norm() < 1e-12);
        prop_assert!((avg[(0, 1)] - m[(0, 1)] * chi.sin()).norm() < 1e-12);
    }

    #[test]
    fn control_map_outputs_states(rho in state(), chi in 0.0..=FRAC_PI_2, eta in 0.0..=FRAC_PI_2) {
        let out = control_map(&rho, chi, eta).unwrap();
        prop_assert!(out.validate().is_ok());
    }

    #[test]
    fn exact_run_matches_closed_form(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64, chi in 0.0..=FRAC_PI_2) {
        let params = ProtocolParams::new(theta, p, chi, eta_opt(theta, p, chi)).unwrap();
        let r = run_protocol_exact(&params).unwrap();
        prop_assert!((r.fidelity_avg - avg_fidelity_analytic(theta, p, chi)).abs() < 1e-10);
        // the two inputs are mirror images, so they score the same
        prop_assert!((r.fidelity_plus - r.fidelity_minus).abs() < 1e-12);
    }

    #[test]
    fn optimal_eta_beats_neighbours(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64, chi in 0.0..=FRAC_PI_2, d in 1e-3..0.3f64) {
        let eta = eta_opt(theta, p, chi);
        let f = |e: f64| run_protocol_exact(&ProtocolParams::new(theta, p, chi, e.clamp(0.0, FRAC_PI_2)).unwrap()).unwrap().fidelity_avg;
        prop_assert!(f(eta) >= f(eta + d) - 1e-12);
        prop_assert!(f(eta) >= f(eta - d) - 1e-12);
    }

    #[test]
    fn optimal_strength_attains_optimum(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64) {
        let chi = chi_opt(theta, p).chi;
        prop_assert!((avg_fidelity_analytic(theta, p, chi) - avg_fidelity_opt(theta, p)).abs() < 1e-10);
    }

    #[test]
    fn optimum_dominates_limits(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64, chi in 0.0..=FRAC_PI_2) {
        let best = avg_fidelity_opt(theta, p);
        prop_assert!(best >= fidelity_dn(theta, p).max(fidelity_h(theta, p)) - 1e-12);
        prop_assert!(best >= avg_fidelity_analytic(theta, p, chi) - 1e-12);
    }

    #[test]
    fn optimum_decreases_with_noise(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64, q in 0.0..=0.5f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(avg_fidelity_opt(theta, hi) <= avg_fidelity_opt(theta, lo) + 1e-12);
    }

    #[test]
    fn full_dephasing_collapses_to_helstrom(theta in 0.0..=FRAC_PI_2) {
        prop_assert!((avg_fidelity_opt(theta, 0.5) - fidelity_h(theta, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn helstrom_ignores_noise(theta in 0.0..=FRAC_PI_2, p in 0.0..=0.5f64, q in 0.0..=0.5f64) {
        prop_assert!((fidelity_h(theta, p) - fidelity_h(theta, q)).abs() < 1e-12);
        prop_assert!((avg_fidelity_analytic(theta, p, 0.0) - fidelity_h(theta, p)).abs() < 1e-12);
    }

    #[test]
    fn mixed_counts_reconstruct_dephased_state(theta in 0.0..=FRAC_PI_2, s in sign(), p in 0.0..=0.5f64) {
        let rho = make_input_state(theta, s).unwrap().to_density();
        let ens = expected_ensemble(&rho, &phase_flip(&rho), p, 100.0, 60.0, Rounding::Exact).unwrap();
        let rec = linear_inversion(&ens.mixed).unwrap();
        prop_assert!(max_abs(&(rec.matrix - dephase(&rho, p).unwrap().matrix())) < 1e-12);
    }

    #[test]
    fn imperfect_gate_keeps_probabilities_physical(rho in state(), chi in 0.0..=FRAC_PI_2, r_h in 0.0..=1.0f64, r_v in 0.0..=1.0f64) {
        let gate = ppbs_conditional(&Ppbs::new(r_h, r_v).unwrap());
        let (a, b) = gate_measurement(&rho, &MeterState::new(chi).unwrap(), &gate).unwrap();
        prop_assert!(a.success_probability >= 0.0 && b.success_probability >= 0.0);
        prop_assert!(a.success_probability + b.success_probability <= 1.0 + 1e-12);
        for o in [a, b] {
            prop_assert!(o.post_signal.validate().is_ok());
        }
    }
}
