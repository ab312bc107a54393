//! Measurement semantics: conditioning reconstructs the partial trace, the
//! heralded conditionals are pure, and efficiency never degrades them.

mod common;

use std::collections::BTreeSet;

use common::{density_matrix, reduced_density, trace_distance, union_basis};
use photonlace::detect::{condition, fidelity, outcome_distribution, ClickPattern};
use photonlace::elements::apply_circuit;
use photonlace::schemes::{
    bell, concentrate, fig1_circuit, fig1_detectors, raw_state, Bell, DetectorSet, RawStateParams,
};
use photonlace::{FockState, Occupation};

fn fig1_output(r: f64, phi: f64) -> FockState {
    apply_circuit(&raw_state(&RawStateParams { r, phi }).unwrap(), &fig1_circuit()).unwrap()
}

#[test]
fn conditioning_reconstructs_the_partial_trace() {
    let state = fig1_output(0.7, 0.4);
    for eta in [0.6, 1.0] {
        let detectors = fig1_detectors(DetectorSet::Two, eta).unwrap();
        let outcomes = outcome_distribution(&state, &detectors).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);

        // Unmonitored beams in the two-detector set-up.
        let keep: BTreeSet<String> = ["2p", "3p", "y", "z"].map(String::from).into_iter().collect();
        let kept_states: Vec<&FockState> = outcomes
            .iter()
            .flat_map(|o| o.conditional.members().iter().map(|(_, s)| s))
            .collect();
        let basis: Vec<Occupation> = {
            let mut b = union_basis(kept_states.iter().copied());
            // Make sure the basis covers the original state's kept occupations.
            for (occ, _) in state.terms() {
                let kept = occ.restrict_to_beams(&keep);
                if !b.contains(&kept) {
                    b.push(kept);
                }
            }
            b.sort();
            b
        };

        let mut reconstructed =
            nalgebra::DMatrix::<photonlace::Complex64>::zeros(basis.len(), basis.len());
        for outcome in &outcomes {
            let weight = photonlace::Complex64::new(outcome.probability, 0.0);
            reconstructed += density_matrix(&outcome.conditional, &basis) * weight;
        }
        let reduced = reduced_density(&state, &keep, &basis);
        let d = trace_distance(&reconstructed, &reduced);
        assert!(d < 1e-9, "eta={} trace distance {}", eta, d);
    }
}

#[test]
fn heralded_conditionals_are_pure() {
    // Threshold conditioning generally yields a mixture; here it stays pure.
    for r in [0.2, 1.0, 5.0] {
        for phi in [0.0, 0.9 * std::f64::consts::PI] {
            let state = fig1_output(r, phi);
            let detectors = fig1_detectors(DetectorSet::Two, 1.0).unwrap();
            let pattern = ClickPattern::of_clicks(&detectors, &["Dx", "Dw"]).unwrap();
            let keep: BTreeSet<String> = ["2p", "3p"].map(String::from).into_iter().collect();
            let cond = condition(&state, &detectors, &pattern, &keep).unwrap();
            assert_eq!(cond.len(), 1, "r={} phi={}", r, phi);
        }
    }
}

#[test]
fn efficiency_does_not_touch_the_outcome_quality() {
    let target = bell(Bell::PhiPlus, "2p", "3p");
    for eta in [0.3, 0.7, 1.0] {
        let res = concentrate(&RawStateParams { r: 1.4, phi: 2.0 }, DetectorSet::Two, eta).unwrap();
        assert!((res.outcomes[0].fidelity - 1.0).abs() < 1e-9, "eta={}", eta);
        // And the conditional itself matches the Bell target directly.
        let f = fidelity(&res.outcomes[0].conditional, &target);
        assert!((f - 1.0).abs() < 1e-9);
    }
}

#[test]
fn four_detector_cross_heralds_get_corrected() {
    let res = concentrate(&RawStateParams { r: 0.8, phi: 1.2 }, DetectorSet::Four, 1.0).unwrap();
    assert_eq!(res.outcomes.len(), 4);
    for outcome in &res.outcomes {
        assert!(
            (outcome.fidelity - 1.0).abs() < 1e-9,
            "pattern {} fidelity {}",
            outcome.pattern,
            outcome.fidelity
        );
    }
    // All four heralds are equally likely.
    let p0 = res.outcomes[0].probability;
    for outcome in &res.outcomes[1..] {
        assert!((outcome.probability - p0).abs() < 1e-12);
    }
}
