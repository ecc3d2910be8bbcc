mod common;

use common::{random_graph, random_partition, random_set, rng};
use oim_core::rr::{build_pool, sample_count, sample_rr_set, SamplingMode, SamplingPlan};
use oim_core::world::{exact_activation_prob, exact_objective};
use oim_core::NodeId;

#[test]
fn rr_hit_frequency_matches_activation_probability() {
    let mut r = rng(11);
    let trials = 4000u64;
    let mut checked = 0;
    for case in 0..12 {
        let n = 6;
        let g = random_graph(&mut r, n, 0.35, 8);
        let s = random_set(&mut r, n, 2);
        let u = (case % n) as NodeId;
        let p = exact_activation_prob(&g, &s, u).unwrap();
        let hits = (0..trials)
            .filter(|&i| {
                sample_rr_set(&g, u, 1000 * case as u64 + i)
                    .unwrap()
                    .iter()
                    .any(|v| s.contains(v))
            })
            .count() as f64;
        let freq = hits / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * se + 1e-12,
            "case {case}: frequency {freq} vs probability {p}"
        );
        checked += 1;
    }
    assert_eq!(checked, 12);
}

#[test]
fn world_pool_is_exact_on_deterministic_graphs() {
    let mut r = rng(5);
    for case in 0..10 {
        let n = 3 + case % 6;
        let g = random_graph(&mut r, n, 0.4, 0);
        let part = random_partition(&mut r, n, 0.4, 0.2);
        let pool = build_pool(&g, &part, &SamplingPlan::fixed(7, SamplingMode::World), case as u64).unwrap();
        for _ in 0..10 {
            let s = random_set(&mut r, n, n);
            let est = pool.estimate_sigma(&s);
            let exact = exact_objective(&g, &part, &s).unwrap();
            assert_eq!(est.sigma_net, exact.exact_net);
            assert_eq!(est.sigma_pos, exact.exact_pos);
            assert_eq!(est.sigma_neg, exact.exact_neg);
        }
    }
}

#[test]
fn rootsample_pools_are_unbiased() {
    let mut r = rng(21);
    let pools = 200;
    for case in 0..4u64 {
        let n = 7;
        let g = random_graph(&mut r, n, 0.3, 8);
        let part = random_partition(&mut r, n, 0.4, 0.2);
        let s = random_set(&mut r, n, 2);
        let exact = exact_objective(&g, &part, &s).unwrap().exact_net;
        let plan = SamplingPlan::fixed(500, SamplingMode::RootSample);
        let est: Vec<f64> = (0..pools)
            .map(|i| build_pool(&g, &part, &plan, case * 10_000 + i).unwrap().estimate_sigma(&s).sigma_net)
            .collect();
        let mean = est.iter().sum::<f64>() / pools as f64;
        let var = est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (pools - 1) as f64;
        let se = (var / pools as f64).sqrt();
        assert!((mean - exact).abs() <= 4.0 * se + 1e-9, "case {case}: {mean} vs {exact} (se {se})");
    }
}

#[test]
fn world_pools_concentrate() {
    let mut r = rng(2);
    let n = 8;
    let g = random_graph(&mut r, n, 0.3, 10);
    let part = random_partition(&mut r, n, 0.4, 0.2);
    let s = random_set(&mut r, n, 2);
    let exact = exact_objective(&g, &part, &s).unwrap().exact_net;
    let (k, eps) = (2, 0.3);
    let delta = 1.0 / (100.0 * k as f64 * n as f64);
    let plan = SamplingPlan::from_accuracy(n, k, eps, delta, SamplingMode::World).unwrap();
    assert_eq!(plan.l, sample_count(n, k, eps, delta).unwrap());
    let ok = (0..100)
        .filter(|&i| {
            let est = build_pool(&g, &part, &plan, i).unwrap().estimate_sigma(&s).sigma_net;
            (est - exact).abs() <= eps * n as f64
        })
        .count();
    assert!(ok >= 95);
}
