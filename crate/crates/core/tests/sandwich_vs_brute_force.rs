mod common;

use common::{pool_optimum, random_graph, random_partition, rng};
use oim_core::fixtures::fixture_a;
use oim_core::rr::{SamplingMode, SamplingPlan};
use oim_core::selector::ratio_report;
use oim_core::world::brute_force_opt;
use oim_core::{build_bound_tables, build_pool, sandwich_greedy, SandwichOptions, SignedSamplePool};

const APPROX: f64 = 1.0 - 1.0 / std::f64::consts::E;

fn pool_for(seed: u64, n: usize, pos: f64, neutral: f64) -> SignedSamplePool {
    let mut r = rng(seed);
    let g = random_graph(&mut r, n, 0.25, 12);
    let part = random_partition(&mut r, n, pos, neutral);
    build_pool(&g, &part, &SamplingPlan::fixed(300, SamplingMode::RootSample), seed).unwrap()
}

#[test]
fn all_positive_greedy_is_within_one_minus_inverse_e() {
    for seed in 0..8 {
        let pool = pool_for(seed, 10, 1.0, 0.0);
        let tables = build_bound_tables(&pool);
        for k in 1..=3 {
            let res = sandwich_greedy(&pool, k, &tables, SandwichOptions::default()).unwrap();
            let (_, opt) = pool_optimum(&pool, k);
            assert!(res.coverage_mid.net() as f64 >= APPROX * opt as f64);
            assert!(res.sigma_returned >= res.sigma_mid);
        }
    }
}

#[test]
fn data_dependent_bound_holds_on_positive_leaning_pools() {
    for seed in 100..108 {
        let pool = pool_for(seed, 10, 0.6, 0.2);
        let tables = build_bound_tables(&pool);
        for k in 1..=3 {
            let res = sandwich_greedy(&pool, k, &tables, SandwichOptions::default()).unwrap();
            let (opt_set, opt) = pool_optimum(&pool, k);
            if opt <= 0 {
                continue;
            }
            let rep = ratio_report(&pool, &res, &tables, Some(&opt_set));
            let ratio = rep.best().unwrap();
            let lhs = pool.coverage(&res.returned).net() as f64;
            assert!(lhs >= ratio * APPROX * opt as f64, "seed {seed} k {k}: {lhs} < {ratio} * {opt}");
        }
    }
}

#[test]
fn upper_and_lower_chains_optimize_their_bounds_exactly() {
    for seed in 200..205 {
        let pool = pool_for(seed, 9, 0.5, 0.1);
        let tables = build_bound_tables(&pool);
        for k in 1..=3 {
            let res = sandwich_greedy(&pool, k, &tables, SandwichOptions::default()).unwrap();
            let best_upper = oim_core::world::combinations(9, k)
                .into_iter()
                .map(|s| tables.upper_count(&s))
                .max()
                .unwrap();
            let best_lower = oim_core::world::combinations(9, k)
                .into_iter()
                .map(|s| tables.lower_count(&s))
                .max()
                .unwrap();
            assert_eq!(tables.upper_count(&res.chain_upper), best_upper);
            assert_eq!(tables.lower_count(&res.chain_lower), best_lower);
        }
    }
}

#[test]
fn fixture_selection_agrees_with_exhaustive_search() {
    let (g, part) = fixture_a();
    let (opt, value) = brute_force_opt(&g, &part, 1).unwrap();
    assert_eq!((opt.clone(), value), (vec![2], 1.0));
    for mode in [SamplingMode::World, SamplingMode::RootSample] {
        let pool = build_pool(&g, &part, &SamplingPlan::fixed(2000, mode), 9).unwrap();
        let tables = build_bound_tables(&pool);
        let res = sandwich_greedy(&pool, 1, &tables, SandwichOptions::default()).unwrap();
        assert_eq!(res.returned, opt);
    }
}
