use mpindex::conditions::{check_pcl, PclMode};
use mpindex::experiments::census::census_instance;
use mpindex::reformulate::{embed_finite_horizon, family_horizon, gittins_indices, horizon_state, ClassicBandit};
use mpindex::{adaptive_greedy, evaluate_policy, family_full, region, solve_wage, test_indexability, ActiveSet};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_agrees_with_oracle_under_pcl(n in 2usize..6, beta in 0.05f64..0.95, k in 0u64..1_000_000) {
        let b = census_instance(n, beta, 11, k).unwrap();
        let pcl = check_pcl(&b, &family_full(b.partition()), PclMode::Exhaustive).unwrap();
        prop_assume!(pcl.pcl_indexable() == Some(true));
        let v = test_indexability(&b).unwrap();
        prop_assert!(v.indexable);
        let ag = adaptive_greedy(&b, &family_full(b.partition())).unwrap();
        for (s, idx) in &v.mpi {
            prop_assert!((ag.index_of(*s).unwrap() - idx).abs() < 1e-8);
        }
    }

    #[test]
    fn optimal_sets_at_a_wage_are_optimal(n in 2usize..5, beta in 0.1f64..0.9, k in 0u64..1000, nu in -1.0f64..2.0) {
        let b = census_instance(n, beta, 5, k).unwrap();
        let sol = solve_wage(&b, nu).unwrap();
        let objective = |s: &ActiveSet| {
            let e = evaluate_policy(&b, s).unwrap();
            e.f_agg - nu * e.g_agg
        };
        let best = objective(&sol.minimal_active_set);
        prop_assert!((best - objective(&sol.maximal_active_set)).abs() < 1e-9);
        for mask in 0u32..(1 << n) {
            let s = ActiveSet::from_states((0..n).filter(|i| mask >> i & 1 == 1));
            prop_assert!(objective(&s) <= best + 1e-9);
        }
    }

    #[test]
    fn boundary_slopes_are_the_indices(n in 2usize..5, beta in 0.1f64..0.9, k in 0u64..1000) {
        let b = census_instance(n, beta, 9, k).unwrap();
        let v = test_indexability(&b).unwrap();
        prop_assume!(v.indexable);
        let r = region(&b).unwrap();
        let slopes = r.slopes();
        prop_assert_eq!(slopes.len(), n);
        for (slope, (_, idx)) in slopes.iter().zip(&v.mpi) {
            prop_assert!((slope - idx).abs() < 1e-7);
        }
    }
}

#[test]
fn long_horizon_index_approaches_gittins() {
    let cb = ClassicBandit {
        beta: 0.5,
        reward: vec![0.3, 0.9, 0.1, 0.6],
        trans: vec![
            vec![0.1, 0.4, 0.2, 0.3],
            vec![0.5, 0.1, 0.3, 0.1],
            vec![0.2, 0.2, 0.2, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
        ],
        startup_cost: 0.0,
    };
    let g = gittins_indices(&cb).unwrap();
    let t = 30;
    let b = embed_finite_horizon(&cb, t).unwrap();
    let r = adaptive_greedy(&b, &family_horizon(4, t)).unwrap();
    for i in 0..4 {
        assert!((r.index_of(horizon_state(4, t, i)).unwrap() - g[i]).abs() < 1e-8);
    }
}
