//! Exact per-instance identities checked against an independent brute-force
//! tour enumerator.

use proptest::prelude::*;
use qtsp_core::instance::{
    enumerate_costs, exact_mean_pairsum, exact_second_moment_decomposition, generate_instance,
    index_from_tour, second_moment_decomposition, tour_count, tour_from_index,
};
use qtsp_core::phase::{cost_to_phase, PhaseMap};
use qtsp_core::{TourIndex, TspInstance};

/// All tour costs by recursive backtracking over unvisited cities; order is
/// irrelevant for moments.
fn brute_force_costs(inst: &TspInstance) -> Vec<f64> {
    fn walk(inst: &TspInstance, path: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<f64>) {
        let n = inst.n();
        if path.len() == n {
            let mut c = 0.0;
            for w in path.windows(2) {
                c += inst.cost(w[0], w[1]);
            }
            c += inst.cost(path[n - 1], 0);
            out.push(c);
            return;
        }
        for city in 1..n {
            if !used[city] {
                used[city] = true;
                path.push(city);
                walk(inst, path, used, out);
                path.pop();
                used[city] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; inst.n()];
    used[0] = true;
    walk(inst, &mut vec![0], &mut used, &mut out);
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn mean_and_second_moment_match_brute_force() {
    for n in 4..=8 {
        for s in 0..100u64 {
            let inst = generate_instance(n, 0.0, 1.0, 1000 * n as u64 + s).unwrap();
            let costs = brute_force_costs(&inst);
            assert_eq!(costs.len(), tour_count(n).unwrap());
            let mean = costs.iter().sum::<f64>() / costs.len() as f64;
            let m2 = costs.iter().map(|c| c * c).sum::<f64>() / costs.len() as f64;
            assert!(rel(exact_mean_pairsum(&inst), mean) < 1e-12, "n={n} s={s}");
            assert!(rel(second_moment_decomposition(&inst).unwrap(), m2) < 1e-10);
            assert!(rel(exact_second_moment_decomposition(&inst).unwrap(), m2) < 1e-10);
        }
    }
}

#[test]
fn enumeration_order_matches_unranking() {
    let inst = generate_instance(7, 0.5, 1.5, 4).unwrap();
    let costs = enumerate_costs(&inst).unwrap();
    let mut sorted_ours = costs.clone();
    let mut sorted_brute = brute_force_costs(&inst);
    sorted_ours.sort_by(f64::total_cmp);
    sorted_brute.sort_by(f64::total_cmp);
    assert_eq!(sorted_ours, sorted_brute);
    for (k, &c) in costs.iter().enumerate() {
        let t = tour_from_index(TourIndex(k), 7).unwrap();
        assert_eq!(c, qtsp_core::instance::tour_cost(&inst, &t));
    }
}

#[test]
fn uniform_entries_average_to_midpoint() {
    let mut sum = 0.0;
    let mut count = 0usize;
    for seed in 0..10_000u64 {
        let inst = generate_instance(6, 0.0, 1.0, seed).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                if j != k {
                    sum += inst.cost(j, k);
                    count += 1;
                }
            }
        }
    }
    assert!((sum / count as f64 - 0.5).abs() < 0.01);
}

/// Pooled tour-cost variance over an ensemble of instances against the
/// corrected closed form `(c2 - c1)²/12` per city.
#[test]
fn pooled_variance_per_city_matches_uniform_variance() {
    for n in 8..=10 {
        let (mut s1, mut s2, mut count) = (0.0, 0.0, 0.0);
        for seed in 0..100u64 {
            let inst = generate_instance(n, 0.0, 1.0, 7_000 + seed).unwrap();
            for c in enumerate_costs(&inst).unwrap() {
                s1 += c;
                s2 += c * c;
                count += 1.0;
            }
        }
        let var = s2 / count - (s1 / count).powi(2);
        let per_city = var / n as f64;
        assert!(rel(per_city, 1.0 / 12.0) < 0.10, "n={n}: {per_city}");
    }
}

/// The within-instance variance is biased low: the instance mean itself
/// fluctuates with variance `nσ²/(n-1)`, leaving `nσ²(n-2)/(n-1)`.
#[test]
fn within_instance_variance_carries_finite_n_factor() {
    let n = 7;
    let mut acc = 0.0;
    let trials = 2000;
    for seed in 0..trials as u64 {
        let inst = generate_instance(n, 0.0, 1.0, seed).unwrap();
        let costs = enumerate_costs(&inst).unwrap();
        let m = costs.iter().sum::<f64>() / costs.len() as f64;
        acc += costs.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / costs.len() as f64;
    }
    let expected = n as f64 / 12.0 * (n as f64 - 2.0) / (n as f64 - 1.0);
    assert!(rel(acc / trials as f64, expected) < 0.02);
}

#[test]
fn text_format_round_trips_random_instances() {
    for seed in 0..20 {
        let inst = generate_instance(5 + seed as usize % 4, 0.1, 7.3, seed).unwrap();
        assert_eq!(TspInstance::from_text(&inst.to_text()).unwrap(), inst);
    }
}

proptest! {
    #[test]
    fn ranking_is_bijective(n in 3usize..=8, raw in any::<u64>()) {
        let count = tour_count(n).unwrap();
        let k = (raw % count as u64) as usize;
        let t = tour_from_index(TourIndex(k), n).unwrap();
        prop_assert_eq!(t.visits()[0], 0);
        prop_assert_eq!(index_from_tour(&t), TourIndex(k));
    }

    #[test]
    fn tour_costs_respect_bounds(n in 3usize..=7, c1 in 0.0f64..5.0, w in 0.01f64..5.0, seed in any::<u64>()) {
        let inst = generate_instance(n, c1, c1 + w, seed).unwrap();
        let costs = enumerate_costs(&inst).unwrap();
        let lo = n as f64 * c1;
        let hi = n as f64 * (c1 + w);
        let slack = 1e-12 * hi;
        prop_assert!(costs.iter().all(|&c| c >= lo - slack && c <= hi + slack));
        prop_assert!(PhaseMap::from_instance(&inst).is_ok());
    }

    #[test]
    fn phases_are_scale_invariant(n in 3usize..=7, seed in any::<u64>(), k in 0.01f64..100.0) {
        let inst = generate_instance(n, 0.5, 2.0, seed).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 0.0 } else { k * inst.cost(j, i) }).collect())
            .collect();
        let scaled = TspInstance::from_matrix(&rows, k * 0.5, k * 2.0, seed).unwrap();
        let a = PhaseMap::from_instance(&inst).unwrap();
        let b = PhaseMap::from_instance(&scaled).unwrap();
        for (x, y) in a.phases().iter().zip(b.phases()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_map_is_monotone(n in 3usize..=9, c1 in 0.0f64..3.0, w in 0.1f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let lo = n as f64 * c1;
        let span = n as f64 * w;
        let (x, y) = (lo + a.min(b) * span, lo + a.max(b) * span);
        let px = cost_to_phase(x, n, c1, c1 + w).unwrap();
        let py = cost_to_phase(y, n, c1, c1 + w).unwrap();
        prop_assert!(px <= py);
        prop_assert!((0.0..=std::f64::consts::TAU).contains(&px));
    }
}
