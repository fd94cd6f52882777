mod common;

use geosbm::sbm::planted_partition_kernel;
use geosbm::theory::*;
use geosbm::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn arb_kernel() -> impl Strategy<Value = (DMatrix<f64>, Vec<f64>)> {
    (1usize..5).prop_flat_map(|k| {
        (
            proptest::collection::vec(0.1f64..20.0, k * k),
            proptest::collection::vec(0.1f64..1.0, k),
        )
            .prop_map(move |(raw, w)| {
                let m = DMatrix::from_row_slice(k, k, &raw);
                let b = (&m + m.transpose()) * 0.5;
                let total: f64 = w.iter().sum();
                (b, w.iter().map(|x| x / total).collect())
            })
    })
}

proptest! {
    #[test]
    fn eigenfunctions_are_pi_orthonormal_and_reconstruct((b, pi) in arb_kernel()) {
        let sp = spectral_params(&b, &pi).unwrap();
        let k = pi.len();
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((sp.pi_inner(i, j) - expect).abs() < 1e-10);
            }
        }
        prop_assert!(sp.lambdas.windows(2).all(|w| w[0].abs() >= w[1].abs()));
        let scale = b.amax().max(1.0);
        prop_assert!((sp.reconstruct_kernel() - &b).amax() < 1e-8 * scale);
        prop_assert!((sp.reconstruct_mean() - &sp.mean_matrix).amax() < 1e-8 * scale);
    }

    #[test]
    fn tau_solves_its_equation_minimally(
        l1 in 1.2f64..20.0,
        frac in 0.0f64..1.0,
        k in 1usize..5,
        log_n in 3.0f64..12.0,
    ) {
        let l2 = l1 * frac;
        let n = log_n.exp();
        for kind in [PairKind::Within, PairKind::Cross] {
            if kind == PairKind::Cross && k == 1 {
                continue;
            }
            let Ok(t) = solve_tau(l1, l2, k, n, kind) else { continue };
            let lhs = distance_lhs(l1, l2, k, t, kind);
            prop_assert!((lhs - n).abs() <= 1e-9 * n, "{kind:?}: lhs {lhs} vs {n}");
            prop_assert!(distance_lhs(l1, l2, k, t * (1.0 - 1e-6), kind) < n);
        }
    }
}

#[test]
fn planted_partition_spectrum_closed_form() {
    for (p, q, k) in [(3.0, 1.0, 2), (12.0, 3.0, 3), (5.0, 5.0, 4), (14.0, 2.0, 2)] {
        let b = DMatrix::from_fn(k, k, |a, c| if a == c { p } else { q });
        let sp = spectral_params(&b, &uniform(k)).unwrap();
        let (l1, l2) = planted_lambdas(p, q, k);
        assert!((sp.lambdas[0] - l1).abs() < 1e-12);
        for &l in &sp.lambdas[1..] {
            assert!((l - l2).abs() < 1e-12);
        }
    }
    assert_eq!(planted_lambdas(3.0, 1.0, 2), (2.0, 1.0));
}

#[test]
fn generic_solver_agrees_with_the_planted_equations() {
    for (p, q, k, n) in [(14.0, 2.0, 2, 1e4), (6.0, 4.0, 2, 1e5), (12.0, 3.0, 3, 5e3), (20.0, 1.0, 4, 2e4)] {
        let b = planted_partition_kernel(p, q, k).unwrap();
        let (l1, l2) = planted_lambdas(p, q, k);
        let within = solve_tau(l1, l2, k, n, PairKind::Within).unwrap();
        let cross = solve_tau(l1, l2, k, n, PairKind::Cross).unwrap();
        let g_within = solve_tau_generic(&b, &uniform(k), 0, 0, n).unwrap();
        let g_cross = solve_tau_generic(&b, &uniform(k), 0, 1, n).unwrap();
        assert!((within - g_within).abs() < 1e-9 * within);
        assert!((cross - g_cross).abs() < 1e-9 * cross);
        assert!(within < cross);
    }
}

#[test]
fn threshold_statistic_relations() {
    assert!((threshold_ratio(14.0, 2.0, 2) - 4.5).abs() < 1e-12);
    assert!((decelle_f(14.0, 2.0) - 18.0).abs() < 1e-12);
    let mut rng = common::rng(2);
    for _ in 0..200 {
        let q = rng.random::<f64>() * 10.0 + 0.01;
        let p = q + rng.random::<f64>() * 20.0;
        assert!((decelle_f(p, q) - 4.0 * threshold_ratio(p, q, 2)).abs() < 1e-9 * decelle_f(p, q).max(1.0));
    }
    for (ratio, alpha, k) in [(4.5, 8.0, 2), (1.5, 8.0, 2), (2.0, 10.0, 3)] {
        let (p, q) = planted_from_ratio(ratio, alpha, k).unwrap();
        assert!((threshold_ratio(p, q, k) - ratio).abs() < 1e-9);
        assert!(((p + (k as f64 - 1.0) * q) / k as f64 - alpha).abs() < 1e-9);
    }
    assert!(planted_from_ratio(8.0, 8.0, 2).is_err());
}

#[test]
fn expected_population_matches_simulation() {
    let cases = [
        (DMatrix::from_element(1, 1, 2.0), vec![1.0]),
        (planted_partition_kernel(3.0, 1.0, 2).unwrap(), uniform(2)),
    ];
    for (b, pi) in cases {
        let sp = spectral_params(&b, &pi).unwrap();
        let moments = population_moments(&b, &pi, 0, 6, 10_000, 17).unwrap();
        let mut z0 = vec![0.0; pi.len()];
        z0[0] = 1.0;
        for t in 0..=6 {
            let expect = expected_population(&sp, &z0, t);
            for a in 0..pi.len() {
                let (m, se) = (moments.mean[t][a], moments.std_error[t][a]);
                assert!((m - expect[a]).abs() <= 3.0 * se + 1e-12, "t {t} type {a}: {m} vs {}", expect[a]);
            }
        }
    }
}

#[test]
fn survival_matches_the_fixed_point_and_grows_with_degree() {
    let mut last = 0.0;
    for (i, alpha) in [0.8, 1.5, 2.0, 3.0, 4.0].into_iter().enumerate() {
        let b = DMatrix::from_element(1, 1, alpha);
        let mc = survival_probability(&b, &[1.0], 10_000, SURVIVAL_HORIZON, 40 + i as u64).unwrap();
        let exact = survival_total(&b, &[1.0]).unwrap();
        let se = mc.std_error.max(1.0 / mc.reps as f64);
        assert!((mc.rho - exact).abs() <= 2.0 * se, "alpha {alpha}: {} vs {exact}", mc.rho);
        assert!(mc.rho >= last);
        last = mc.rho;
    }
    let rho = survival_total(&DMatrix::from_element(1, 1, 2.0), &[1.0]).unwrap();
    assert!((rho - (1.0 - (-2.0 * rho).exp())).abs() < 1e-12);
    assert!((rho - 0.7968).abs() < 1e-4);
}

#[test]
fn giant_kernel_scaling() {
    let b = planted_partition_kernel(14.0, 2.0, 2).unwrap();
    assert_eq!(giant_kernel_adjust(&b, 0.0, 2).unwrap().amax(), 0.0);
    assert!((giant_kernel_adjust(&b, 0.8, 2).unwrap() - &b * 0.64).amax() < 1e-12);
    let one = DMatrix::from_element(1, 1, 3.0);
    assert_eq!(giant_kernel_adjust(&one, 1.0, 1).unwrap(), one);
    assert!(giant_kernel_adjust(&b, 1.5, 2).is_err());
}

fn percentile_99(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[(0.99 * (v.len() - 1) as f64).round() as usize]
}

#[test]
fn martingale_deviation_stays_bounded() {
    let b = planted_partition_kernel(14.0, 2.0, 2).unwrap();
    let pi = uniform(2);
    let sp = spectral_params(&b, &pi).unwrap();
    for k in 0..2 {
        let mut early = Vec::new();
        let mut late = Vec::new();
        for rep in 0..2000 {
            let traj = simulate_mtgw_seeded(&b, &pi, rep % 2, 8, u64::MAX / 4, rep as u64).unwrap();
            early.push(martingale_deviation(&traj, &sp, k, 2, 4).unwrap());
            late.push(martingale_deviation(&traj, &sp, k, 4, 8).unwrap());
        }
        assert!(late.iter().chain(&early).all(|x| x.is_finite()));
        let (e, l) = (percentile_99(early), percentile_99(late));
        assert!(l <= 3.0 * e, "eigen-index {k}: {l} vs {e}");
    }
}

#[test]
fn normalized_population_variance_settles() {
    let b = DMatrix::from_element(1, 1, 3.0);
    let moments = population_moments(&b, &[1.0], 0, 10, 10_000, 5).unwrap();
    let var = |s: usize| {
        let se = moments.std_error[s][0];
        se * se * 10_000.0 / 3f64.powi(2 * s as i32)
    };
    // Var(Z_s / 3^s) = (1 - 3^-s) / 2
    for s in [6, 8, 10] {
        assert!((var(s) - 0.5).abs() < 0.1, "s {s}: {}", var(s));
    }
    assert!((var(10) - var(8)).abs() < 0.02 * var(8));
}

#[test]
fn extinct_trajectories_have_finite_deviation() {
    let b = DMatrix::from_element(1, 1, 0.0);
    let traj = simulate_mtgw_seeded(&b, &[1.0], 0, 10, 1000, 0).unwrap();
    assert!(traj.is_extinct());
    assert_eq!(traj.generations.len(), 2);
    let sp = spectral_params(&DMatrix::from_element(1, 1, 2.0), &[1.0]).unwrap();
    assert!(martingale_deviation(&traj, &sp, 0, 3, 6).unwrap().is_finite());
}

#[test]
fn davis_kahan_holds_on_random_perturbations() {
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![10.0, 5.0, 1.0]));
    let mut rng = common::rng(70);
    let noise = common::random_symmetric(3, &mut rng) * 0.01;
    let dk = davis_kahan_bound(&h, &(&h + noise), 2).unwrap();
    assert!((dk.delta - 4.0).abs() < 1e-12);
    assert!(dk.holds());
    let same = davis_kahan_bound(&h, &h, 2).unwrap();
    assert!(same.bound == 0.0 && same.achieved < 1e-12);

    let mut checked = 0;
    while checked < 100 {
        let h = common::random_symmetric(30, &mut rng) * 3.0;
        let e = common::random_symmetric(30, &mut rng) * rng.random::<f64>();
        let k = rng.random_range(1..6);
        let dk = match davis_kahan_bound(&h, &(&h + &e), k) {
            Ok(dk) if dk.delta > 0.1 => dk,
            Ok(_) | Err(Error::BoundHypothesis(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(dk.holds(), "achieved {} > bound {}", dk.achieved, dk.bound);
        checked += 1;
    }
}
