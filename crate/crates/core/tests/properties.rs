mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;

use biased_games::analysis::{region_scan, threshold_p_star};
use biased_games::classical::{
    classical_closed_form, classical_value_chsh, classical_value_svetlichny, enumerate_classical_value,
    EnumerationOrder,
};
use biased_games::nonsignaling::{
    expected_score, ns_value, ns_vertices, simulate_rounds, BehaviorTable,
};
use biased_games::quantum::{
    compute_alpha, optimal_strategy, quantum_value_chsh, quantum_value_joint_oracle, tsirelson_biased,
};
use biased_games::qubit::{mat_mul, PlanarObservable, PureState, IDENTITY};
use biased_games::svetlichny::{ghz_objective, ghz_objective_statevector, quantum_value_svetlichny, AngleSet};
use biased_games::{
    chsh_score, expand_svetlichny, expectation_to_success, joint_score, BiasPair, CorrelatorTable, JointBias,
    OptimizerConfig,
};
use common::*;

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn joint_score_factorizes(p in 0.001f64..0.999, q in 0.001f64..0.999,
                              e in prop::array::uniform4(-1.0f64..=1.0)) {
        let bias = BiasPair::new(p, q).unwrap();
        let corr = CorrelatorTable::new([[e[0], e[1]], [e[2], e[3]]]).unwrap();
        prop_assert!((chsh_score(&bias, &corr) - joint_score(&bias.to_joint(), &corr)).abs() <= 1e-12);
    }

    #[test]
    fn success_map_is_affine_and_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0, t in 0.0f64..=1.0) {
        let (sa, sb) = (expectation_to_success(a).unwrap(), expectation_to_success(b).unwrap());
        prop_assert!((0.0..=1.0).contains(&sa));
        if a <= b {
            prop_assert!(sa <= sb);
        }
        let mid = expectation_to_success(t * a + (1.0 - t) * b).unwrap();
        prop_assert!((mid - (t * sa + (1.0 - t) * sb)).abs() <= 1e-15);
    }

    #[test]
    fn ghz_closed_form_matches_state_vector(n in 2usize..=8, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let e = expand_svetlichny(n, rng.random_range(0.05..0.95)).unwrap();
        let a = AngleSet::new(
            rng.random_range(-10.0..10.0),
            (0..n).map(|_| rng.random_range(-10.0..10.0)).collect(),
        ).unwrap();
        let closed = ghz_objective(&e, &a).unwrap();
        prop_assert!((closed - ghz_objective_statevector(&e, &a).unwrap()).abs() < 1e-10);
        // shift invariance
        let shifted = AngleSet::new(a.phi0 + std::f64::consts::TAU,
            a.phi.iter().map(|v| v + std::f64::consts::TAU).collect()).unwrap();
        prop_assert!((closed - ghz_objective(&e, &shifted).unwrap()).abs() < 1e-10);
        prop_assert!((closed - ghz_objective(&e, &a.canonical()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn alpha_stays_in_range(t1 in -7.0f64..7.0, t2 in -7.0f64..7.0, g in -4.0f64..4.0) {
        let a = compute_alpha(&PlanarObservable::xz(t1), &PlanarObservable::xz(t2), &PureState::schmidt(g)).unwrap();
        prop_assert!(a.abs() <= 2.0 + 1e-12);
        prop_assert!((a - 2.0 * (t1 - t2).cos()).abs() < 1e-12);
    }
}

#[test]
fn expansion_matches_recursion() {
    let mut rng = rng(2024);
    for n in 2..=6 {
        for &p in &[0.3, 0.5, 0.8] {
            let e = expand_svetlichny(n, p).unwrap();
            for _ in 0..200 {
                let c = sign_vector(&mut rng, n);
                let cp = sign_vector(&mut rng, n);
                let (u, v) = masks_from(&c, &cp);
                assert_abs_diff_eq!(
                    e.evaluate_signs(u, v),
                    svetlichny_recursive(n, p, &c, &cp),
                    epsilon = 1e-12
                );
            }
            let ones = vec![1.0; n];
            let total: f64 = e.terms().map(|(_, w)| w).sum();
            assert_abs_diff_eq!(total, svetlichny_recursive(n, p, &ones, &ones), epsilon = 1e-12);
        }
    }
}

#[test]
fn classical_enumeration_matches_closed_form_on_grid() {
    for &p in &grid(0.5, 0.99, 21) {
        for &q in &grid(0.5, 0.99, 21) {
            let (v, w) = classical_value_chsh(&JointBias::product(p, q).unwrap());
            assert_abs_diff_eq!(v, classical_closed_form(p, q).unwrap(), epsilon = 1e-12);
            let rescored = joint_score(&JointBias::product(p, q).unwrap(), &w.correlators().unwrap());
            assert_abs_diff_eq!(rescored, v, epsilon = 1e-12);
        }
    }
}

#[test]
fn classical_value_is_fold_symmetric() {
    let mut rng = rng(5);
    for _ in 0..100 {
        let (p, q) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
        let v = |p, q| classical_value_chsh(&JointBias::product(p, q).unwrap()).0;
        let base = v(p, q);
        for other in [v(1.0 - p, q), v(p, 1.0 - q), v(1.0 - p, 1.0 - q)] {
            assert_abs_diff_eq!(base, other, epsilon = 1e-12);
        }
    }
}

#[test]
fn svetlichny_classical_order_independent_and_attained() {
    for n in 2..=6 {
        for &p in &[0.35, 0.5, 0.7, 0.9] {
            let e = expand_svetlichny(n, p).unwrap();
            let fwd = enumerate_classical_value(&e, EnumerationOrder::Forward).unwrap();
            let rev = enumerate_classical_value(&e, EnumerationOrder::Reverse).unwrap();
            assert_eq!(fwd, rev);
            let (v, w) = classical_value_svetlichny(n, p).unwrap();
            let (u, pm) = w.sign_masks();
            assert_eq!(e.evaluate_signs(u, pm), v);
            assert_abs_diff_eq!(v, fwd.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn quantum_bound_dominates_classical_on_grid() {
    for &p in &grid(0.5, 0.99, 21) {
        for &q in &grid(0.5, 0.99, 21) {
            let t = tsirelson_biased(p, q).unwrap();
            let c = classical_value_chsh(&JointBias::product(p, q).unwrap()).0;
            assert!(t >= c - 1e-12);
            if p * q >= 0.5 {
                assert_abs_diff_eq!(t, c, epsilon = 1e-9);
            } else {
                assert!(t > c + 1e-9, "({p}, {q})");
            }
        }
    }
}

#[test]
fn explicit_strategy_attains_bound() {
    let mut rng = rng(77);
    let mut checked = 0;
    while checked < 100 {
        let (p, q): (f64, f64) = (rng.random_range(0.5..1.0), rng.random_range(0.5..1.0));
        if p * q >= 0.5 - 1e-6 {
            continue;
        }
        let s = optimal_strategy(p, q).unwrap();
        for o in s.alice.iter().chain(&s.bob) {
            let m = o.matrix();
            let sq = mat_mul(&m, &m);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((sq[r][c] - IDENTITY[r][c]).norm() < 1e-12);
                }
            }
        }
        let corr = s.correlators();
        assert!(corr.values().iter().flatten().all(|e| e.abs() <= 1.0));
        let bias = BiasPair::new(p, q).unwrap();
        assert_abs_diff_eq!(chsh_score(&bias, &corr), tsirelson_biased(p, q).unwrap(), epsilon = 1e-9);
        checked += 1;
    }
}

#[test]
fn oracle_is_fold_symmetric() {
    let mut rng = rng(31);
    let cfg = OptimizerConfig::default();
    for _ in 0..25 {
        let (p, q) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let a = quantum_value_joint_oracle(&JointBias::product(p, q).unwrap(), &cfg).unwrap();
        let b = quantum_value_joint_oracle(&JointBias::product(1.0 - p, q).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 2e-6);
        let closed = quantum_value_chsh(&BiasPair::new(p, q).unwrap());
        assert_abs_diff_eq!(a.value, closed, epsilon = 2e-6);
    }
}

#[test]
fn restarts_never_lower_the_value() {
    let mut last = f64::NEG_INFINITY;
    for starts in [1, 2, 4, 8, 16] {
        let cfg = OptimizerConfig { starts, seed: 9, ..Default::default() };
        let r = quantum_value_svetlichny(4, 0.8, &cfg).unwrap();
        assert!(r.value >= last);
        last = r.value;
    }
}

#[test]
fn svetlichny_quantum_dominates_classical() {
    let cfg = OptimizerConfig::default();
    for n in 2..=5 {
        for &p in &[0.5, 0.7, 0.85, 0.95] {
            let q = quantum_value_svetlichny(n, p, &cfg).unwrap();
            let (c, _) = classical_value_svetlichny(n, p).unwrap();
            assert!(q.value >= c - 1e-9, "n={n} p={p}: {} < {c}", q.value);
            let e = expand_svetlichny(n, p).unwrap();
            assert_abs_diff_eq!(ghz_objective(&e, &q.angles).unwrap(), q.value, epsilon = 1e-10);
        }
    }
}

#[test]
fn ns_value_dominates_vertex_mixtures() {
    let mut rng = rng(8);
    let vertices = ns_vertices();
    for _ in 0..100 {
        let bias = random_joint(&mut rng);
        let (best, _) = ns_value(&bias);
        let raw: Vec<f64> = (0..vertices.len()).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (v, w) in vertices.iter().zip(&raw) {
            for x in 0..2 {
                for y in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            probs[x][y][a][b] += w / total * v.prob(a, b, x, y);
                        }
                    }
                }
            }
        }
        let mixture = BehaviorTable::new(probs).unwrap();
        assert!(joint_score(&bias, &mixture.correlators()) <= best + 1e-12);
        assert_abs_diff_eq!(expected_score(&mixture, &bias), joint_score(&bias, &mixture.correlators()), epsilon = 1e-12);
    }
}

#[test]
fn bound_chain_on_grid() {
    for &p in &grid(0.02, 0.98, 13) {
        for &q in &grid(0.02, 0.98, 13) {
            let bias = BiasPair::new(p, q).unwrap();
            let c = classical_value_chsh(&bias.to_joint()).0;
            let qv = quantum_value_chsh(&bias);
            let (ns, _) = ns_value(&bias.to_joint());
            assert!(c <= qv + 1e-9 && qv <= ns + 1e-9);
            assert_abs_diff_eq!(ns, 1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn simulated_correlators_converge() {
    let rounds = 1_000_000u64;
    let bias = JointBias::product(0.6, 0.6).unwrap();
    let strategy = optimal_strategy(0.6, 0.6).unwrap();
    let exact = strategy.correlators();
    let behavior = BehaviorTable::from_correlators_uniform(&exact);
    let report = simulate_rounds(&behavior, &bias, rounds, 1).unwrap();
    for x in 0..2 {
        for y in 0..2 {
            let n = report.counts[x][y] as f64;
            let e = exact.get(x, y);
            let se = ((1.0 - e * e) / n).sqrt();
            let est = report.conditionals[x][y].unwrap();
            assert!((est - e).abs() <= 5.0 * se, "E{x}{y}: {est} vs {e}");
        }
    }
    let v = chsh_score(&BiasPair::new(0.6, 0.6).unwrap(), &exact);
    let sigma = ((1.0 - v * v) / rounds as f64).sqrt();
    assert!((report.empirical_score - v).abs() <= 3.0 * sigma);
}

#[test]
fn deterministic_simulation_matches_exact_score() {
    let rounds = 1_000_000u64;
    let bias = JointBias::product(0.75, 0.75).unwrap();
    let all_plus = BehaviorTable::try_from([
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    .unwrap();
    let r = simulate_rounds(&all_plus, &bias, rounds, 2).unwrap();
    let sigma = ((1.0 - 0.875f64 * 0.875) / rounds as f64).sqrt();
    assert!((r.empirical_score - 0.875).abs() <= 3.0 * sigma);
}

#[test]
fn region_scan_is_mirror_symmetric() {
    let steps = 19;
    let rows = region_scan(steps).unwrap();
    let idx = |i: usize, j: usize| i * steps + j;
    for i in 0..steps {
        for j in 0..steps {
            let r = &rows[idx(i, j)];
            for m in [&rows[idx(steps - 1 - i, j)], &rows[idx(i, steps - 1 - j)]] {
                assert_abs_diff_eq!(r.classical, m.classical, epsilon = 1e-9);
                assert_abs_diff_eq!(r.quantum, m.quantum, epsilon = 1e-9);
                assert_eq!(r.advantage, m.advantage);
            }
        }
    }
}

#[test]
fn threshold_is_stable_under_tolerance_halving() {
    let cfg = OptimizerConfig::default();
    let tol = 2e-3;
    let coarse = threshold_p_star(3, tol, &cfg).unwrap();
    let fine = threshold_p_star(3, tol / 2.0, &cfg).unwrap();
    assert!((coarse.p_star - fine.p_star).abs() <= tol);
}
