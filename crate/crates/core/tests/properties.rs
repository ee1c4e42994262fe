//! Randomized invariants: mixture normalization and gamma bounds, convexity
//! agreement, symplectic tableau structure, engine agreement, rewrite
//! idempotence, and schema round trips.

mod common;

use cliffvar::{
    check_convexity_condition, circuit_from_json, circuit_to_json, evaluate_cost, one_fold,
    two_fold, AngleDistribution, DenseState, StabilizerTableau,
};
use common::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

const GAMMA_SLACK: f64 = 1e-12;

fn normalized_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut atoms {
        *w /= total;
    }
    atoms
}

fn arb_dirac() -> impl Strategy<Value = AngleDistribution> {
    prop::collection::vec((0.0..TAU, 0.05..1.0f64), 1..5)
        .prop_map(|atoms| AngleDistribution::dirac_mixture(normalized_atoms(atoms)).unwrap())
}

fn arb_even_dirac() -> impl Strategy<Value = AngleDistribution> {
    prop::collection::vec((0.0..TAU, 0.05..1.0f64), 1..4).prop_map(|pairs| {
        let atoms = pairs
            .into_iter()
            .flat_map(|(theta, w)| [(theta, w / 2.0), (-theta, w / 2.0)])
            .collect();
        AngleDistribution::dirac_mixture(normalized_atoms(atoms)).unwrap()
    })
}

fn arb_law() -> impl Strategy<Value = AngleDistribution> {
    prop_oneof![
        Just(AngleDistribution::uniform()),
        (-2.0..2.0f64, 0.02..4.0f64)
            .prop_map(|(mean, var)| AngleDistribution::gaussian(mean, var).unwrap()),
        arb_dirac(),
        arb_even_dirac(),
    ]
}

fn arb_even_law() -> impl Strategy<Value = AngleDistribution> {
    prop_oneof![
        Just(AngleDistribution::uniform()),
        (0.02..4.0f64).prop_map(|var| AngleDistribution::gaussian(0.0, var).unwrap()),
        arb_even_dirac(),
    ]
}

/// Positive probabilities of stabilizer measurements are exact powers of
/// two, so the mantissa field is all zeros.
fn is_power_of_half(p: f64) -> bool {
    p > 0.0 && p <= 1.0 && p.to_bits() & ((1u64 << 52) - 1) == 0
}

proptest! {
    #[test]
    fn mixture_weights_sum_to_one_and_gamma_is_bounded(law in arb_law()) {
        let single = one_fold(&law).unwrap();
        prop_assert!((single.total_weight() - 1.0).abs() < 1e-12);
        prop_assert!(single.gamma() <= 2.0 + GAMMA_SLACK);

        let pair = two_fold(&law).unwrap();
        prop_assert!((pair.total_weight() - 1.0).abs() < 1e-12);
        prop_assert!(pair.gamma() <= 1.0 + SQRT_2 + GAMMA_SLACK);
    }

    #[test]
    fn even_laws_stay_within_the_even_gamma_bound(law in arb_even_law()) {
        prop_assert!(one_fold(&law).unwrap().is_convex());
        prop_assert!(two_fold(&law).unwrap().gamma() <= 1.25 + GAMMA_SLACK);
    }

    #[test]
    fn convexity_condition_agrees_with_pair_mixture(law in arb_even_law()) {
        prop_assert_eq!(
            check_convexity_condition(&law).unwrap(),
            two_fold(&law).unwrap().is_convex()
        );
    }

    #[test]
    fn recentering_a_shifted_even_law_zeroes_sine_moments(
        law in arb_even_law(),
        quarters in -2i32..=2,
    ) {
        let c = f64::from(quarters) * FRAC_PI_2;
        let shifted = shift_law(&law, c).with_center(c).unwrap();
        let back = shifted.recenter(c).unwrap();
        for t in 1..=2 {
            let (_, s) = back.moment(t).unwrap();
            prop_assert!(s.abs() < 1e-12, "sine moment {t} is {s:.3e}");
        }
    }

    #[test]
    fn tableaus_stay_symplectic(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let gates = random_gates(&mut r, n, 30);
        let tableau = StabilizerTableau::run_circuit(&gates, n);
        prop_assert!(tableau.symplectic_ok());
    }

    #[test]
    fn dense_and_stabilizer_engines_agree(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let gates = random_gates(&mut r, n, 25);
        let observable = random_observable(&mut r, n);

        let tableau = StabilizerTableau::run_circuit(&gates, n);
        let mut state = DenseState::zero(n).unwrap();
        for gate in &gates {
            state.apply_gate(gate);
        }
        let diff = (observable.expectation(&tableau) - state.expectation(&observable)).abs();
        prop_assert!(diff < 1e-10, "engines differ by {diff:.3e}");
    }

    #[test]
    fn projector_probabilities_are_dyadic(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let gates = random_gates(&mut r, n, 25);
        let tableau = StabilizerTableau::run_circuit(&gates, n);
        let support: Vec<usize> = (0..n).collect();
        let p = tableau.zero_projector_probability(&support);
        prop_assert!(p == 0.0 || is_power_of_half(p), "probability {p} is not dyadic");
    }

    #[test]
    fn canonical_rewrite_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let m = r.random_range(1..=4);
        let circuit = random_circuit(&mut r, n, m, 3);
        let canonical = circuit.canonicalize_to_z();
        prop_assert!(canonical.is_canonical());
        prop_assert_eq!(canonical.canonicalize_to_z(), canonical);
    }

    #[test]
    fn schema_round_trip_preserves_the_document(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let m = r.random_range(1..=4);
        let circuit = random_circuit(&mut r, n, m, 3);
        let dists: Vec<AngleDistribution> = (0..m).map(|_| random_dist(&mut r)).collect();
        let observable = random_observable(&mut r, n);

        let text = circuit_to_json(&circuit, &dists, &observable).unwrap();
        let (circuit2, dists2, observable2) = circuit_from_json(&text).unwrap();
        prop_assert_eq!(&circuit2, &circuit);
        prop_assert_eq!(&observable2, &observable);
        prop_assert_eq!(dists2.len(), dists.len());
        for (a, b) in dists2.iter().zip(&dists) {
            for t in 1..=2 {
                let (ra, sa) = a.moment(t).unwrap();
                let (rb, sb) = b.moment(t).unwrap();
                prop_assert!((ra - rb).abs() < 1e-15 && (sa - sb).abs() < 1e-15);
            }
        }

        let theta = random_theta(&mut r, m);
        let ca = evaluate_cost(&circuit, &observable, &theta).unwrap();
        let cb = evaluate_cost(&circuit2, &observable2, &theta).unwrap();
        prop_assert!((ca - cb).abs() < 1e-15);
    }
}

/// The same law translated by c, built through the public constructors.
fn shift_law(law: &AngleDistribution, c: f64) -> AngleDistribution {
    use cliffvar::AngleLaw;
    match law.law() {
        AngleLaw::Uniform => AngleDistribution::uniform(),
        AngleLaw::Gaussian { mean, var } => {
            AngleDistribution::gaussian(mean + c, *var).unwrap()
        }
        AngleLaw::DiracMixture(atoms) => AngleDistribution::dirac_mixture(
            atoms.iter().map(|&(a, w)| (a + c, w)).collect(),
        )
        .unwrap(),
        AngleLaw::TabulatedMoments { .. } => unreachable!("not generated here"),
    }
}
