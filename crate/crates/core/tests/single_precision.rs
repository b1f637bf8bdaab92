use std::f32::consts::PI;

use wgsense_core::measurement::{pauli_observable, PauliLabel};
use wgsense_core::metrology::{
    pauli_search, qfi_closed_form, qfi_numeric, sense, DerivativeMode, SensingConfig,
};
use wgsense_core::optics::{rotation, rotation_waveplates, Axis};
use wgsense_core::qmath::{concurrence, fidelity};
use wgsense_core::stategen::{simulate_generation, weighted_graph_state, GenerationConfig};

#[test]
fn qfi_in_f32() {
    let s = weighted_graph_state(PI);
    assert!((qfi_numeric(&s) - 4.0).abs() < 1e-5);
    assert!((qfi_closed_form(PI / 2.0) - 2.75).abs() < 1e-6);
}

#[test]
fn pauli_search_in_f32() {
    let (obs, r) = pauli_search(PI, &SensingConfig::<f32>::default()).unwrap();
    assert_eq!(obs.pauli_labels(), Some((PauliLabel::Z, PauliLabel::Y)));
    assert!((r.estimator_variance - 0.25).abs() < 1e-5);
    let zy = pauli_observable::<f32>(PauliLabel::Z, PauliLabel::Y);
    let r = sense(
        &weighted_graph_state(PI / 2.0).to_density(),
        &zy,
        &SensingConfig::default(),
        DerivativeMode::Analytic,
    )
    .unwrap();
    assert!((r.expectation + 0.5).abs() < 1e-5);
}

#[test]
fn generation_and_metrics_in_f32() {
    let g = simulate_generation(&GenerationConfig::<f32>::canonical(PI / 3.0)).unwrap();
    let target = weighted_graph_state(PI / 3.0);
    assert!(fidelity(&g.state.to_density(), &target) > 1.0 - 1e-5);
    assert!((concurrence(&target.to_density()) - (PI / 6.0).sin()).abs() < 1e-3);
}

#[test]
fn waveplates_in_f32() {
    let u = rotation_waveplates(Axis::X, 0.7f32).compose();
    assert!(u.phase_aligned_distance(&rotation(Axis::X, 0.7f32)) < 1e-5);
}
