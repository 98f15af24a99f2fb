mod common;

use jelk::baselines::kruskal_wallis;
use jelk::data::{pairwise_distances, PooledData, Sample};
use jelk::jackknife::{all_pseudo_values, pseudo_values};
use jelk::jel::{estimating_equations, jel_analyze, solve_system, weights, SolverConfig};
use jelk::stats::chi_square_sf;
use jelk::verify_wilks;
use ndarray::Array2;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn to_array(points: &[Vec<f64>]) -> Array2<f64> {
    let d = points[0].len();
    Array2::from_shape_vec((points.len(), d), points.concat()).unwrap()
}

fn pooled(groups: &[Vec<Vec<f64>>]) -> PooledData {
    PooledData::new(
        groups
            .iter()
            .enumerate()
            .map(|(k, g)| Sample::new(format!("g{k}"), to_array(g)))
            .collect(),
    )
    .unwrap()
}

fn point_set(max_n: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_d).prop_flat_map(move |d| {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 3..=max_n)
    })
}

fn groups_strategy(max_k: usize, max_m: usize) -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    (2..=max_k, 1..=2usize).prop_flat_map(move |(k, d)| {
        prop::collection::vec(
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 3..=max_m),
            k,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distances_form_a_metric(points in point_set(12, 4)) {
        let dm = pairwise_distances(to_array(&points).view()).unwrap();
        let n = points.len();
        for i in 0..n {
            prop_assert_eq!(dm.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                for k in 0..n {
                    prop_assert!(dm.get(i, k) <= dm.get(i, j) + dm.get(j, k) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn total_two_ways(points in point_set(40, 3)) {
        let dm = pairwise_distances(to_array(&points).view()).unwrap();
        let n = points.len();
        let mut direct = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                direct += common::dist(&points[i], &points[j]);
            }
        }
        let halved = dm.row_sums().iter().sum::<f64>() / 2.0;
        prop_assert!((dm.total() - direct).abs() <= 1e-9 * direct.max(1e-300));
        prop_assert!((halved - direct).abs() <= 1e-9 * direct.max(1e-300));
    }

    #[test]
    fn pseudo_values_match_leave_one_out(points in point_set(30, 3)) {
        let dm = pairwise_distances(to_array(&points).view()).unwrap();
        let fast = pseudo_values(&dm, None).unwrap();
        let slow = common::naive_pseudo_values(&points);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
        let mean = fast.iter().sum::<f64>() / fast.len() as f64;
        prop_assert!((mean - common::naive_u(&points)).abs() <= 1e-10);
    }

    #[test]
    fn wilks_identities_hold(raw in prop::collection::vec(0.02f64..1.0, 2..=6)) {
        let total: f64 = raw.iter().sum();
        let mut alpha: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let k = alpha.len();
        let head: f64 = alpha[..k - 1].iter().sum();
        alpha[k - 1] = 1.0 - head;
        let c = verify_wilks(&alpha).unwrap();
        for (i, e) in c.eigenvalues.iter().enumerate() {
            let want = if i < 2 { 0.0 } else { 1.0 };
            prop_assert!((e - want).abs() <= 1e-8, "{:?}", c.eigenvalues);
        }
        prop_assert!((c.trace - (k as f64 - 1.0)).abs() <= 1e-10);
        prop_assert!(c.identity_ok);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn solution_satisfies_all_equations(groups in groups_strategy(3, 12)) {
        let p = pooled(&groups);
        let dm = pairwise_distances(p.points()).unwrap();
        let pv = all_pseudo_values(&p, &dm).unwrap();
        let cfg = SolverConfig::default();
        if let Ok(sol) = solve_system(&pv, &cfg) {
            prop_assert!(sol.converged);
            let r = estimating_equations(&pv, sol.theta, sol.lambda_pooled, &sol.lambda_group);
            prop_assert!(r.iter().all(|x| x.abs() <= cfg.outer_tol), "{:?}", r);
            let (wp, wg) = weights(&pv, &sol).unwrap();
            prop_assert!((wp.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            for w in &wg {
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-8);
                prop_assert!(w.iter().all(|x| *x > 0.0));
            }
        }
    }

    #[test]
    fn statistic_is_affine_invariant(
        groups in groups_strategy(3, 10),
        a in 0.1f64..20.0,
        b in -50.0f64..50.0,
    ) {
        let p = pooled(&groups);
        let moved: Vec<Vec<Vec<f64>>> = groups
            .iter()
            .map(|g| g.iter().map(|x| x.iter().map(|v| a * v + b).collect()).collect())
            .collect();
        let q = pooled(&moved);
        let cfg = SolverConfig::default();
        if let (Ok(r1), Ok(r2)) = (jel_analyze(&p, 0.05, &cfg), jel_analyze(&q, 0.05, &cfg)) {
            let (s1, s2) = (r1.result.statistic, r2.result.statistic);
            prop_assert!((s1 - s2).abs() <= 1e-8 * s1.abs().max(1.0), "{} vs {}", s1, s2);
        }
    }

    #[test]
    fn kruskal_wallis_ignores_monotone_maps(
        values in prop::collection::hash_set(-1000i32..1000, 9..40),
        k in 2usize..4,
    ) {
        let v: Vec<f64> = values.into_iter().map(|x| x as f64 / 7.0).collect();
        let labels: Vec<usize> = (0..v.len()).map(|i| i % k).collect();
        let cubed: Vec<f64> = v.iter().map(|x| x * x * x).collect();
        let h1 = kruskal_wallis(&v, &labels, 0.05).unwrap().statistic;
        let h2 = kruskal_wallis(&cubed, &labels, 0.05).unwrap().statistic;
        prop_assert_eq!(h1, h2);
    }
}

#[test]
fn chi_square_matches_reference_library() {
    for k in 1..=12u32 {
        let reference = ChiSquared::new(k as f64).unwrap();
        let mut x = 0.05;
        while x < 60.0 {
            let ours = chi_square_sf(x, k).unwrap();
            let theirs = reference.sf(x);
            assert!(
                (ours - theirs).abs() <= 1e-12 + 1e-9 * theirs,
                "k={k} x={x}: {ours} vs {theirs}"
            );
            x += 0.45;
        }
    }
}

#[test]
fn solver_matches_grid_profile_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for _ in 0..40 {
        let k = rng.random_range(2..=3);
        let groups: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|g| {
                let m = rng.random_range(3..=10);
                common::normal_points(m, 1, 1.0 + 0.3 * g as f64, 0.0, &mut rng)
            })
            .collect();
        let p = pooled(&groups);
        let dm = pairwise_distances(p.points()).unwrap();
        let pv = all_pseudo_values(&p, &dm).unwrap();
        let vectors: Vec<Vec<f64>> = pv.vectors().map(|v| v.to_vec()).collect();
        let (Some((oracle, _)), Ok(sol)) = (common::grid_profile_oracle(&vectors), solve_system(&pv, &SolverConfig::default())) else {
            continue;
        };
        assert!((sol.neg2_log_r - oracle).abs() <= 1e-4, "{} vs {oracle}", sol.neg2_log_r);
        compared += 1;
    }
    assert!(compared >= 30);
}
