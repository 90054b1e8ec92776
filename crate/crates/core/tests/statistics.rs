use std::f64::consts::{PI, TAU};

use qtsp_core::classical_baseline::{best_of_k, mean_queries, run_trials};
use qtsp_core::instance::generate_instance;
use qtsp_core::phase::{eta_for_quantile, phase_stats, PhaseMap};
use qtsp_core::theory::{
    asymptotic_f, gaussian_f0, integrate, tail_efold_eta, variance_experiment, GaussianModel,
    Variant,
};
use qtsp_core::TourSet;

#[test]
fn single_instance_phase_spread() {
    let inst = generate_instance(9, 0.0, 1.0, 21).unwrap();
    let ps = phase_stats(&PhaseMap::from_instance(&inst).unwrap());
    let predicted = PI / (3.0 * 9.0f64).sqrt();
    assert!((ps.std_phase / predicted - 1.0).abs() < 0.25);
}

#[test]
fn mean_phase_sits_at_pi() {
    let mut acc = 0.0;
    for seed in 0..100 {
        let inst = generate_instance(9, 0.0, 1.0, seed).unwrap();
        acc += phase_stats(&PhaseMap::from_instance(&inst).unwrap()).mean_phase;
    }
    assert!((acc / 100.0 / PI - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_model_normalization_by_quadrature() {
    for (n, c1, c2) in [(5, 0.0, 1.0), (8, 1.0, 3.0), (12, 0.0, 2.0)] {
        let m = GaussianModel::ensemble(n, c1, c2).unwrap();
        let total = integrate(|c| m.density(c), n as f64 * c1, n as f64 * c2, 1e-10);
        assert!((total / m.count - 1.0).abs() < 1e-6);
    }
    // off-centre model truncated hard by the range
    let m = GaussianModel::new(1.0, 2.0, 720.0, 4, 0.0, 2.0).unwrap();
    let total = integrate(|c| m.density(c), 0.0, 8.0, 1e-10);
    assert!((total / 720.0 - 1.0).abs() < 1e-6);
}

#[test]
fn gaussian_f0_tracks_enumerated_window() {
    let model = GaussianModel::ensemble(9, 0.0, 1.0).unwrap();
    let eta = 4.0 * PI / 27f64.sqrt();
    let predicted = gaussian_f0(eta, &model, 9, 0.0, 1.0).unwrap();
    let mut enum_sum = 0.0;
    for seed in 0..50 {
        let inst = generate_instance(9, 0.0, 1.0, seed).unwrap();
        enum_sum += PhaseMap::from_instance(&inst)
            .unwrap()
            .window_set(eta)
            .fraction();
    }
    let ratio = predicted / (enum_sum / 50.0);
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn asymptotic_exponent_and_tail_window() {
    for n in 3..40 {
        let d = asymptotic_f(n).ln() - asymptotic_f(n + 1).ln();
        assert!((d - 1.5).abs() <= 1.0 / n as f64);
    }
    for n in 8..=12 {
        let model = GaussianModel::ensemble(n, 0.0, 1.0).unwrap();
        let f0 = gaussian_f0(tail_efold_eta(n), &model, n, 0.0, 1.0).unwrap();
        let ratio = f0 / asymptotic_f(n);
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "n={n} ratio {ratio}");
    }
}

#[test]
fn variance_variant_resolution() {
    let shifted = variance_experiment(7, 1.0, 3.0, 2000, 0).unwrap();
    assert_eq!(shifted.winner(), Some(Variant::Corrected));
    let zero = variance_experiment(7, 0.0, 1.0, 2000, 0).unwrap();
    assert!(zero.corrected_in_ci() && zero.half_width_in_ci());
}

#[test]
fn geometric_query_law() {
    let inst = generate_instance(11, 0.0, 1.0, 0).unwrap();
    let n_tours = inst.tour_count();
    for f in [0.5, 0.1, 0.01] {
        let k = (f * n_tours as f64).round() as usize;
        let target = TourSet::from_indices(n_tours, 0..k).unwrap();
        let trials = run_trials(&inst, &target, 1000, 1_000_000, 77).unwrap();
        assert!(trials.iter().all(|t| t.log.found));
        let scaled = mean_queries(&trials) * f;
        assert!((0.9..=1.1).contains(&scaled), "f={f}: {scaled}");
    }
}

#[test]
fn best_of_inverse_f0_hits_window() {
    let inst = generate_instance(7, 0.0, 1.0, 8).unwrap();
    let pm = PhaseMap::from_instance(&inst).unwrap();
    // only the low-cost half of the window can hold the cheapest sample
    let half = eta_for_quantile(&pm, 0.01).unwrap() / 2.0;
    let window = TourSet::from_mask(pm.phases().iter().map(|&p| p <= half).collect());
    let k = (1.0 / window.fraction()).ceil() as u64;
    let hits = (0..200)
        .filter(|&s| window.contains(best_of_k(&inst, k, s).unwrap().best_tour.0))
        .count();
    assert!(hits >= 100, "{hits}/200");
}

#[test]
fn full_window_is_everything() {
    let inst = generate_instance(6, 0.0, 1.0, 8).unwrap();
    let pm = PhaseMap::from_instance(&inst).unwrap();
    assert_eq!(pm.window_set(TAU).len(), 120);
}
