use std::f64::consts::PI;

use kfp_core::dynamics::{complex_order, mean_frequency, mean_velocity, rhs, wrap_angle};
use kfp_core::fixedpoint::{find_fixed_points, residual, solve_newton, states_equal};
use kfp_core::stability::{
    analyze, build_jacobian, cut_sum, edge_differences, eigen_symmetric, find_negative_cut,
};
use kfp_core::{Classification, CutSearch, ModelParams, Network, NewtonOptions, PhaseState};
use proptest::prelude::*;

fn network(max_n: usize) -> impl Strategy<Value = Network> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
            let edges: Vec<_> = pairs
                .zip(bits)
                .filter(|(_, b)| *b)
                .map(|(e, _)| e)
                .collect();
            Network::from_edges(n, edges).unwrap()
        })
    })
}

fn network_and_state(max_n: usize) -> impl Strategy<Value = (Network, PhaseState)> {
    network(max_n).prop_flat_map(|net| {
        let n = net.n();
        (
            Just(net),
            proptest::collection::vec(-PI..PI, n).prop_map(PhaseState::new),
        )
    })
}

fn subset_of(n: usize) -> impl Strategy<Value = Vec<usize>> {
    (1u64..(1u64 << n) - 1).prop_map(move |bits| (0..n).filter(|i| bits >> i & 1 == 1).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn builders_are_simple(n in 3usize..40, half in 1usize..20, m in 1usize..5, seed: u64) {
        let d = 2 * half.min((n - 1) / 2);
        let nets = [
            Network::complete(n).unwrap(),
            Network::wsg(n, d).unwrap(),
            Network::ring_tree(m).unwrap(),
            Network::random_min_degree(n, n / 2, seed).unwrap(),
        ];
        for net in &nets {
            for i in 0..net.n() {
                prop_assert!(!net.has_edge(i, i));
                for &j in net.neighbors(i) {
                    prop_assert!(net.has_edge(j, i));
                }
            }
        }
        prop_assert!((0..n).all(|i| nets[1].degree(i) == d));
    }

    #[test]
    fn dense_degree_floor_implies_connected(n in 2usize..30, seed: u64) {
        let floor = (n - 1).div_ceil(2);
        let net = Network::random_min_degree(n, floor, seed).unwrap();
        prop_assert!(net.min_degree() >= floor);
        prop_assert!(net.is_connected());
    }

    #[test]
    fn mean_velocity_is_mean_frequency(
        (net, state) in network_and_state(9),
        omega_seed in proptest::collection::vec(-3.0..3.0f64, 9),
        k in 0.1..5.0f64,
    ) {
        let params = ModelParams::new(omega_seed[..net.n()].to_vec(), k).unwrap();
        let v = mean_velocity(&state, &params, &net).unwrap();
        prop_assert!((v - mean_frequency(&params)).abs() < 1e-12);
    }

    #[test]
    fn rhs_is_rotation_equivariant((net, state) in network_and_state(9), c in -10.0..10.0f64) {
        let params = ModelParams::homogeneous(net.n());
        let a = rhs(&state, &params, &net).unwrap();
        let b = rhs(&state.rotated(c), &params, &net).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_residual_has_zero_mean((net, state) in network_and_state(10)) {
        let r = residual(&state, &ModelParams::homogeneous(net.n()), &net).unwrap();
        prop_assert!(r.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn jacobian_rows_sum_to_zero_and_symmetric((net, state) in network_and_state(12)) {
        let m = build_jacobian(&state, &net).unwrap();
        prop_assert!(m.row_sums().iter().all(|s| s.abs() < 1e-12));
        let a = m.matrix();
        prop_assert!(a == &a.transpose());
    }

    #[test]
    fn cut_sum_is_negative_quadratic_form(
        (net, state, subset) in network_and_state(10)
            .prop_flat_map(|(net, s)| { let n = net.n(); (Just(net), Just(s), subset_of(n)) })
    ) {
        let m = build_jacobian(&state, &net).unwrap();
        let mut z = vec![0.0; net.n()];
        subset.iter().for_each(|&i| z[i] = 1.0);
        let cut = cut_sum(&state, &net, &subset).unwrap();
        prop_assert!((cut + m.quadratic_form(&z)).abs() < 1e-10);
    }

    #[test]
    fn jacobian_matches_central_differences((net, state) in network_and_state(8)) {
        let n = net.n();
        let params = ModelParams::homogeneous(n);
        let m = build_jacobian(&state, &net).unwrap();
        let h = 1e-5;
        for j in 0..n {
            let mut plus = state.theta().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = rhs(&PhaseState::new(plus), &params, &net).unwrap();
            let fm = rhs(&PhaseState::new(minus), &params, &net).unwrap();
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                prop_assert!((fd - m.matrix()[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn spectrum_sanity_and_rotation_invariance((net, state) in network_and_state(12), c in -5.0..5.0f64) {
        let m = build_jacobian(&state, &net).unwrap();
        let eigs = eigen_symmetric(&m).unwrap();
        let scale = m.trace().abs().max(1.0);
        prop_assert!((eigs.iter().sum::<f64>() - m.trace()).abs() < 1e-8 * scale);
        let f2 = m.frobenius_sq().max(1.0);
        prop_assert!((eigs.iter().map(|l| l * l).sum::<f64>() - m.frobenius_sq()).abs() < 1e-8 * f2);
        prop_assert!(eigs.windows(2).all(|w| w[0] >= w[1]));

        let rotated = eigen_symmetric(&build_jacobian(&state.rotated(c), &net).unwrap()).unwrap();
        for (a, b) in eigs.iter().zip(&rotated) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let all: Vec<usize> = (0..net.n() - 1).collect();
        let a = cut_sum(&state, &net, &all).unwrap();
        let b = cut_sum(&state.rotated(c), &net, &all).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn newton_is_gauge_invariant(
        n in 3usize..9,
        seed: u64,
        c in -3.0..3.0f64,
        noise in proptest::collection::vec(-0.05..0.05f64, 9),
    ) {
        // Newton basins are fractal far from a root, so rounding from the rotation can
        // flip the outcome there; the gauge property is checked near a simple root.
        let net = Network::random_min_degree(n, 2, seed).unwrap();
        let params = ModelParams::homogeneous(n);
        for fp in find_fixed_points(&net, 5, seed, 1e-12) {
            if analyze(&fp.theta, &net).unwrap().zero_modes > 1 {
                continue;
            }
            let start = PhaseState::new(
                fp.theta.theta().iter().zip(&noise).map(|(x, e)| x + e).collect(),
            );
            let a = solve_newton(&net, &params, &start, 0, NewtonOptions::default());
            let b = solve_newton(&net, &params, &start.rotated(c), 0, NewtonOptions::default());
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert!(states_equal(&a.theta, &b.theta, kfp_core::fixedpoint::DEDUP_TOL))
                }
                (a, b) => prop_assert!(a.is_err() && b.is_err(), "{a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn complete_network_fixed_points_satisfy_order_identity(n in 2usize..8, seed: u64) {
        let net = Network::complete(n).unwrap();
        for fp in find_fixed_points(&net, 20, seed, 1e-12) {
            let p = complex_order(&fp.theta).p;
            for &t in fp.theta.theta() {
                let zm = num_complex::Complex64::from_polar(1.0, t);
                prop_assert!((zm.conj() * p).im.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn stable_implies_no_negative_cut_on_random_small_networks() {
    let mut checked_stable = 0;
    for seed in 0..400u64 {
        let n = 3 + (seed % 8) as usize;
        let net = Network::random_min_degree(n, 2, seed).unwrap();
        for fp in find_fixed_points(&net, 15, seed, 1e-10) {
            let report = analyze(&fp.theta, &net).unwrap();
            let cert = find_negative_cut(&fp.theta, &net, CutSearch::Exhaustive).unwrap();
            if report.classification == Classification::Stable {
                checked_stable += 1;
                assert!(cert.is_none(), "seed {seed}: stable yet cut {cert:?}");
            }
            if cert.is_some() {
                assert_eq!(report.classification, Classification::Unstable);
            }
        }
    }
    assert!(
        checked_stable >= 100,
        "only {checked_stable} stable states checked"
    );
}

#[test]
fn edge_angle_remark_holds_both_ways() {
    let mut below = 0;
    let mut above = 0;
    for seed in 0..400u64 {
        let n = 3 + (seed % 9) as usize;
        let net = Network::random_min_degree(n, 2, seed).unwrap();
        for fp in find_fixed_points(&net, 8, seed, 1e-10) {
            let diffs = edge_differences(&fp.theta, &net);
            let report = analyze(&fp.theta, &net).unwrap();
            if net.is_connected() && diffs.iter().all(|d| d.abs() < PI / 2.0 - 1e-9) {
                below += 1;
                assert_eq!(report.classification, Classification::Stable);
            }
            if diffs.iter().all(|d| wrap_angle(*d).abs() > PI / 2.0 + 1e-9) {
                above += 1;
                assert_eq!(report.classification, Classification::Unstable);
            }
        }
    }
    assert!(below > 0 && above > 0, "below {below}, above {above}");
}
