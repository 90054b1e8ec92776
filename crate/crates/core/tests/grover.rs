use std::f64::consts::PI;

use qtsp_core::group_sim::{compare_full_vs_group, group_run, GroupState};
use qtsp_core::instance::generate_instance;
use qtsp_core::phase::{build_group_spec, PhaseMap};
use qtsp_core::quantum_sim::{
    apply_grover, init_uniform, iteration_count, measure, run, CostOracle, GroverConfig, Mode,
};
use qtsp_core::TourSet;

/// Tour-level phase map with `count` tours at each nominal group phase.
fn grouped(m: usize, counts: &[usize]) -> PhaseMap {
    let phases = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat(j as f64 * PI / m as f64).take(c))
        .collect();
    PhaseMap::from_phases(phases).unwrap()
}

fn closed_form(f: f64, r: usize) -> f64 {
    ((2 * r + 1) as f64 * f.sqrt().asin()).sin().powi(2)
}

#[test]
fn two_group_matches_closed_form() {
    for n_tours in [4usize, 100, 1000, 10_000] {
        let pm = grouped(1, &[1, n_tours - 1]);
        let f = 1.0 / n_tours as f64;
        let r = 2 * iteration_count(f, Mode::Continuous).unwrap().total;
        let cfg = GroverConfig::new(
            Mode::Continuous,
            r,
            TourSet::from_indices(n_tours, [0]).unwrap(),
        )
        .unwrap();
        let out = run(&init_uniform(n_tours).unwrap(), &pm, &cfg).unwrap();
        for row in &out.trace {
            assert!(
                (row.p_target - closed_form(f, row.step)).abs() < 1e-9,
                "N={n_tours} step={}",
                row.step
            );
        }
    }
}

#[test]
fn two_group_f_1e3_reaches_high_success() {
    let pm = grouped(1, &[1, 999]);
    let cfg =
        GroverConfig::from_target(Mode::Continuous, TourSet::from_indices(1000, [0]).unwrap())
            .unwrap();
    let out = run(&init_uniform(1000).unwrap(), &pm, &cfg).unwrap();
    assert!(out.final_success() >= 0.99);
}

#[test]
fn four_group_full_run_amplifies_group_zero() {
    let pm = grouped(2, &[1, 2, 95, 2]);
    let target = TourSet::from_indices(100, [0]).unwrap();
    let cfg = GroverConfig::from_target(Mode::Discretized { m: 2 }, target).unwrap();
    assert_eq!(cfg.iterations, 8);
    let out = run(&init_uniform(100).unwrap(), &pm, &cfg).unwrap();
    let p0 = out.group_populations.as_ref().unwrap()[0];
    assert!(p0 >= 0.9, "group-0 probability {p0}");

    let mut gs = GroupState::initial(&[0.01, 0.02, 0.95, 0.02]).unwrap();
    let hist = group_run(&mut gs, cfg.iterations);
    for (row, pops) in out.trace.iter().zip(&hist) {
        assert!((row.p_group0 - pops[0]).abs() < 1e-10);
    }
}

#[test]
fn four_group_reduced_transform() {
    let f = [0.001, 0.002, 0.995, 0.002];
    let r = iteration_count(0.001, Mode::Discretized { m: 2 })
        .unwrap()
        .total;
    let mut gs = GroupState::initial(&f).unwrap();
    let last = group_run(&mut gs, r).pop().unwrap();
    assert!(last[0] >= 0.99 * (f[0] + f[2]), "{}", last[0]);
}

/// Blocks of `G^{2M}` against the exact reduced evolution and against the
/// small-angle rotation by `4M√f0` in the `|0>`-`|π>` plane.
#[test]
fn block_rotation_prediction() {
    let n_tours = 10_000;
    let f0: f64 = 1e-3;
    for m in [1usize, 2, 4, 8] {
        let mut counts = vec![0usize; 2 * m];
        counts[0] = 10;
        for (j, c) in counts.iter_mut().enumerate() {
            if j != 0 && j != m {
                *c = 1;
            }
        }
        counts[m] = n_tours - counts.iter().sum::<usize>();
        let pm = grouped(m, &counts);
        let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / n_tours as f64).collect();
        let blocks = iteration_count(f0, Mode::Discretized { m }).unwrap().total / (2 * m);
        let r = 2 * m * (blocks + 2);
        let target = TourSet::from_indices(n_tours, 0..10).unwrap();
        let cfg = GroverConfig::new(Mode::Discretized { m }, r, target).unwrap();
        let out = run(&init_uniform(n_tours).unwrap(), &pm, &cfg).unwrap();
        let mut gs = GroupState::initial(&fractions).unwrap();
        let hist = group_run(&mut gs, r);

        let f_pi = fractions[m];
        let alpha = (f0 / (f0 + f_pi)).sqrt().asin();
        for k in 0..=blocks + 2 {
            let step = 2 * m * k;
            let exact = hist[step][0];
            assert!((out.trace[step].p_group0 - exact).abs() < 1e-10);
            let predicted = (f0 + f_pi)
                * (alpha + 4.0 * m as f64 * k as f64 * f0.sqrt())
                    .sin()
                    .powi(2);
            assert!(
                (exact - predicted).abs() <= 5.0 * f0.sqrt(),
                "M={m} k={k}: exact {exact} predicted {predicted}"
            );
        }
    }
}

#[test]
fn roots_of_unity_sum() {
    for m in [1usize, 2, 4, 8] {
        for j in 0..2 * m {
            let s: num_complex::Complex64 = (0..2 * m)
                .map(|k| {
                    num_complex::Complex64::from_polar(
                        1.0,
                        2.0 * PI * (k * j) as f64 / (2 * m) as f64,
                    )
                })
                .sum();
            let expected = if j == 0 { 2.0 * m as f64 } else { 0.0 };
            assert!((s.re - expected).abs() < 1e-12 && s.im.abs() < 1e-12);
        }
    }
}

#[test]
fn subspace_invariance_on_instances() {
    let a = compare_full_vs_group(&generate_instance(6, 0.0, 1.0, 1).unwrap(), 4, 40).unwrap();
    assert!(a <= 1e-10, "{a}");
    let b = compare_full_vs_group(&generate_instance(7, 0.0, 1.0, 2).unwrap(), 8, 16).unwrap();
    assert!(b <= 1e-10, "{b}");
}

#[test]
fn long_runs_keep_unit_norm() {
    let inst = generate_instance(6, 0.0, 1.0, 5).unwrap();
    let pm = PhaseMap::from_instance(&inst).unwrap();
    let cfg = GroverConfig::new(Mode::Continuous, 10_000, pm.window_set(3.0)).unwrap();
    let out = run(&init_uniform(pm.len()).unwrap(), &pm, &cfg).unwrap();
    assert_eq!(out.renormalizations.len(), 100);
    assert!((out.state.norm() - 1.0).abs() < 1e-8);
    assert!(out.trace.iter().all(|r| r.norm_drift < 1e-9));
}

#[test]
fn queries_equal_oracle_applications() {
    let inst = generate_instance(6, 0.0, 1.0, 5).unwrap();
    let pm = PhaseMap::from_instance(&inst).unwrap();
    let mut oracle = CostOracle::new(&pm, Mode::Discretized { m: 4 }).unwrap();
    let mut sv = init_uniform(pm.len()).unwrap();
    for _ in 0..37 {
        apply_grover(&mut sv, &mut oracle).unwrap();
    }
    assert_eq!(oracle.queries(), 37);
    let cfg = GroverConfig::new(Mode::Discretized { m: 4 }, 24, pm.window_set(0.1)).unwrap();
    let out = run(&init_uniform(pm.len()).unwrap(), &pm, &cfg).unwrap();
    assert_eq!(out.queries, 24);
    assert_eq!(out.trace.last().unwrap().query_count, 24);
}

#[test]
fn uniform_two_state_measurement_frequencies() {
    let sv = init_uniform(2).unwrap();
    let shots = measure(&sv, 100_000, 17).unwrap();
    let ones = shots.iter().filter(|t| t.0 == 1).count() as f64 / 1e5;
    assert!((ones - 0.5).abs() < 0.01);
}

#[test]
fn group_spec_partitions_tours() {
    for seed in 0..5 {
        let inst = generate_instance(7, 0.0, 1.0, seed).unwrap();
        let pm = PhaseMap::from_instance(&inst).unwrap();
        for m in [1, 2, 4, 8] {
            let gs = build_group_spec(&pm, m, 0.0).unwrap();
            assert_eq!(gs.total(), 720);
            assert!((gs.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
