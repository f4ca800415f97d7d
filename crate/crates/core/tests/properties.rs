use eavesdrop_core::info::{self, RateCurvePoint};
use eavesdrop_core::linalg::{complete_orthonormal_basis, gram_defect, haar_random_unitary, CVec};
use eavesdrop_core::optimality::{
    check_corollary_overlaps, lemma1_residual, nsc_battery_ivs, perturb_breaking,
};
use eavesdrop_core::sim::{brute_force_ig, eve_densities, exact_joint_distribution};
use eavesdrop_core::states::{
    conjugate_setup, delta_pm, ivs_uv_from_xy, ivs_xy_from_uv, optimal_ivs, optimal_pijs, Basis,
    ErrorRates, MeasurementSetup,
};
use eavesdrop_core::synth::{
    alternate_via_is_subspace, change_initial_state, change_measurement, synth_by_basis_completion,
    synth_chain, InitialState,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rate() -> impl Strategy<Value = f64> {
    0.01f64..0.49
}

fn setup(seed: u64) -> MeasurementSetup {
    MeasurementSetup::from_unitary(&haar_random_unitary(4, seed), Basis::Computational).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_unitaries_are_unitary(dim in 1usize..9, seed in any::<u64>()) {
        let u = haar_random_unitary(dim, seed);
        prop_assert!(u.unitarity_defect().unwrap() < 1e-12);
    }

    #[test]
    fn completion_is_orthonormal(seed in any::<u64>(), k in 0usize..4) {
        let u = haar_random_unitary(8, seed);
        let seeds: Vec<CVec> = u.columns().into_iter().take(k).collect();
        let basis = complete_orthonormal_basis(&seeds, 8).unwrap();
        prop_assert_eq!(basis.len(), 8);
        prop_assert!(gram_defect(&basis) < 1e-12);
        for (a, b) in seeds.iter().zip(&basis) {
            prop_assert!(a.max_abs_diff(b) < 1e-15);
        }
    }

    #[test]
    fn delta_identities(d in 0.0f64..=0.5) {
        let (p, m) = delta_pm(d).unwrap();
        prop_assert!((p * p + m * m - 1.0).abs() < 1e-14);
        prop_assert!((2.0 * p * m - (1.0 - 2.0 * d)).abs() < 1e-14);
        prop_assert!(p >= m);
    }

    #[test]
    fn optimal_states_are_well_formed(dx in rate(), du in rate(), seed in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let m = setup(seed);
        let ivs = optimal_ivs(Basis::Computational, &r, &m).unwrap();
        prop_assert!(ivs.invariant_defect() < 1e-12);
        prop_assert!(lemma1_residual(&ivs, &r).unwrap() < 1e-12);
        let p = optimal_pijs(Basis::Computational, &r, &m).unwrap();
        prop_assert!(p.invariant_defect() < 1e-12);
    }

    #[test]
    fn basis_change_round_trip(dx in rate(), du in rate(), seed in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let ivs = optimal_ivs(Basis::Computational, &r, &setup(seed)).unwrap();
        let uv = ivs_uv_from_xy(&ivs, &r).unwrap().complete().unwrap();
        let back = ivs_xy_from_uv(&uv, &r).unwrap().complete().unwrap();
        for bit in 0..2 {
            prop_assert!(back.xi(bit).max_abs_diff(ivs.xi(bit)) < 1e-10);
            prop_assert!(back.zeta(bit).max_abs_diff(ivs.zeta(bit)) < 1e-10);
        }
    }

    #[test]
    fn battery_accepts_optimal_in_both_bases(dx in rate(), du in rate(), seed in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let m = setup(seed);
        let ivs = optimal_ivs(Basis::Computational, &r, &m).unwrap();
        prop_assert!(nsc_battery_ivs(&ivs, &m, &r, 1e-9).unwrap().passed);
        let f = conjugate_setup(&m);
        let ivs_uv = optimal_ivs(Basis::Hadamard, &r, &f).unwrap();
        prop_assert!(nsc_battery_ivs(&ivs_uv, &f, &r, 1e-9).unwrap().passed);
    }

    #[test]
    fn perturbation_breaks_battery(dx in rate(), du in rate(), seed in any::<u64>(), theta in 0.05f64..3.0) {
        let r = ErrorRates::new(dx, du).unwrap();
        let m = setup(seed);
        let ivs = optimal_ivs(Basis::Computational, &r, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bad = perturb_breaking(&ivs, &r, theta, 1e-6, &mut rng);
        prop_assert!(!check_corollary_overlaps(&bad, &r, 1e-9).unwrap().passed);
        prop_assert!(!nsc_battery_ivs(&bad, &m, &r, 1e-9).unwrap().passed);
    }

    #[test]
    fn completion_synthesis_hits_anchors(dx in rate(), du in rate(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let p = optimal_pijs(Basis::Computational, &r, &setup(s1)).unwrap();
        let psi = haar_random_unitary(4, s2).column(0);
        let a = synth_by_basis_completion(&p, &psi).unwrap();
        prop_assert!(a.anchor_defect().unwrap() < 1e-9);
        prop_assert!(a.certify(Basis::Hadamard, 1e-9).unwrap().passed);
    }

    #[test]
    fn transports_commute(dx in rate(), du in rate(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let a = synth_chain(&r, InitialState::Zero).unwrap();
        let t = haar_random_unitary(4, s1);
        let m = setup(s2);
        let lhs = change_measurement(&change_initial_state(&a, &t).unwrap(), &m).unwrap();
        let rhs = change_initial_state(&change_measurement(&a, &m).unwrap(), &t).unwrap();
        prop_assert!(lhs.u.max_abs_diff(&rhs.u) < 1e-10);
    }

    #[test]
    fn alternate_composition_law(d in rate(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = synth_chain(&ErrorRates::symmetric(d).unwrap(), InitialState::Delta).unwrap();
        let t1 = haar_random_unitary(3, s1);
        let t2 = haar_random_unitary(3, s2);
        let twice = alternate_via_is_subspace(&alternate_via_is_subspace(&a, &t1).unwrap(), &t2).unwrap();
        let once = alternate_via_is_subspace(&a, &(&t2 * &t1)).unwrap();
        prop_assert!(twice.u.max_abs_diff(&once.u) < 1e-10);
        prop_assert!(once.u.nonzero_count(1e-12) >= synth_chain(&ErrorRates::symmetric(d).unwrap(), InitialState::DeltaHadamard).unwrap().u.nonzero_count(1e-12));
    }

    #[test]
    fn rate_curve_invariants(d in 0.0f64..=0.5) {
        let p = RateCurvePoint::at(d).unwrap();
        prop_assert!((p.key_rate - (p.mi_ab - p.mi_ae).max(0.0)).abs() < 1e-12);
        for v in [p.ig_star, p.mi_ab, p.mi_ae, p.key_rate] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((0.0..=2.0 * std::f64::consts::SQRT_2 + 1e-15).contains(&p.chsh));
        prop_assert!((p.shrink - info::bloch_shrink(d).unwrap()).abs() == 0.0);
    }

    #[test]
    fn exact_tables_follow_born_rule(dx in rate(), du in rate(), seed in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let a = synth_chain(&r, InitialState::Bell).unwrap();
        let a = change_measurement(&a, &setup(seed)).unwrap();
        for basis in Basis::BOTH {
            let m = if basis == Basis::Computational { a.measurement.clone() } else { conjugate_setup(&a.measurement) };
            let t = exact_joint_distribution(&a, basis, &m);
            for bit in 0..2 {
                prop_assert!((t.row_sum(bit) - 1.0).abs() < 1e-12);
                prop_assert!((t.bob_error(bit) - r.rate(basis)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenbasis_is_never_beaten(dx in rate(), du in rate(), seed in any::<u64>()) {
        let r = ErrorRates::new(dx, du).unwrap();
        let a = synth_chain(&r, InitialState::Zero).unwrap();
        let [r0, r1] = eve_densities(&a, Basis::Computational);
        let o = brute_force_ig(&r0, &r1, 50, seed).unwrap();
        prop_assert!(o.best_ig <= o.eigen_ig + 1e-9);
        prop_assert!((o.eigen_ig - 2.0 * (du * (1.0 - du)).sqrt()).abs() < 1e-10);
    }
}
