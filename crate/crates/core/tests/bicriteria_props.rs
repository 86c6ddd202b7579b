mod common;

use common::weighted_set;
use kcoreset::bicriteria::{beta, bicriteria_centers_report, DistanceClass};
use kcoreset::rng::clamped_log2;
use kcoreset::{
    bicriteria_centers, brute_force_discrete, clustering_cost, generate_instance, gonzalez_kcenter, good_subset,
    partition_by_distance, CenterSet, CostKind, InstanceSpec, PointAccess, Shape, WeightedPointSet,
};
use proptest::prelude::*;

fn uniform(n: usize, seed: u64) -> WeightedPointSet {
    generate_instance(&InstanceSpec {
        n,
        dim: 2,
        seed,
        shape: Shape::Uniform { side: 100.0 },
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seeds_are_centers_and_served(p in weighted_set(2, 150, 40.0), k in 1usize..4, seed in any::<u64>()) {
        let r = good_subset(&p, k, 0.3, seed).unwrap();
        for v in r.seeds.iter() {
            prop_assert!(r.centers.contains(v));
            prop_assert!(r.served.iter().any(|(x, _)| x == v));
        }
        // seeds lead the center list
        prop_assert_eq!(&r.centers.rows()[..r.seeds.len()], &r.seeds.rows()[..]);
    }

    #[test]
    fn classes_above_alpha_are_light(p in weighted_set(2, 200, 40.0), k in 1usize..4, seed in any::<u64>()) {
        let r = good_subset(&p, k, 0.2, seed).unwrap();
        let two_beta = 2.0 * beta(p.total_weight());
        for (i, &w) in r.partition.class_weight.iter().enumerate() {
            if i > r.alpha {
                prop_assert!(w as f64 <= two_beta, "class {} weight {} > {}", i, w, two_beta);
            }
        }
        for (i, c) in r.partition.class_of.iter().enumerate() {
            let served = r.served_indices.binary_search(&i).is_ok();
            prop_assert_eq!(served, matches!(c, DistanceClass::Finite(j) if *j <= r.alpha));
        }
    }

    #[test]
    fn round_count_is_bounded(p in weighted_set(2, 300, 40.0), k in 1usize..3, seed in any::<u64>()) {
        let (x, report) = bicriteria_centers_report(&p, k, 0.1, seed).unwrap();
        let cap = clamped_log2(p.total_weight() as f64).ceil() as usize + 1;
        prop_assert!(report.rounds.len() <= cap);
        prop_assert!(report.rounds.iter().all(|r| r.attempts <= 4));
        prop_assert_eq!(report.total_centers, x.len());
        prop_assert!(x.len() >= k.min(p.distinct_count()));
    }

    #[test]
    fn partition_matches_class_rule(p in weighted_set(1, 60, 20.0), l in 0.0f64..30.0) {
        let x = CenterSet::from_rows(&[[0.0]]).unwrap();
        let part = partition_by_distance(&p, &x, l).unwrap();
        let n = p.total_weight() as f64;
        for i in 0..p.len() {
            let r = p.point(i)[0].abs();
            let expect = if l == 0.0 || r < l / (4.0 * n) {
                DistanceClass::Finite(0)
            } else if r >= 2.0 * l * n {
                DistanceClass::Infinite
            } else if r < l / n {
                DistanceClass::Finite(1)
            } else {
                let mut j = 1;
                while r >= 2f64.powi(j as i32) * l / n {
                    j += 1;
                }
                DistanceClass::Finite(j.min(part.max_class))
            };
            prop_assert_eq!(part.class_of[i], expect, "r={} l={} n={}", r, l, n);
        }
        let finite: u64 = part.class_weight.iter().sum();
        prop_assert_eq!(finite + part.infinite_weight, p.total_weight());
    }
}

#[test]
fn small_input_keeps_every_point() {
    let p = uniform(10, 1);
    let x = bicriteria_centers(&p, 3, 4.0, 2).unwrap();
    assert_eq!(x.len(), 10);
    assert_eq!(clustering_cost(&p, &x, CostKind::Means).unwrap(), 0.0);
    let r = good_subset(&p, 3, 4.0, 2).unwrap();
    assert_eq!(r.alpha, 0);
    assert_eq!(r.served.len(), 10);
    assert!(r.partition.distance.iter().all(|&d| d == 0.0));
}

#[test]
fn separated_singletons_are_all_hit() {
    let rows: Vec<(Vec<f64>, u64)> = (0..4).map(|i| (vec![i as f64 * 1000.0, 0.0], 50)).collect();
    let p = WeightedPointSet::from_weighted_rows(&rows).unwrap();
    let r = good_subset(&p, 4, 4.0, 9).unwrap();
    assert_eq!(r.served.total_weight(), 200);
    assert_eq!(clustering_cost(&r.served, &r.centers, CostKind::Means).unwrap(), 0.0);
}

#[test]
fn rounds_serve_half_on_a_large_cloud() {
    let p = uniform(6000, 3);
    let (x, report) = bicriteria_centers_report(&p, 2, 0.05, 5).unwrap();
    assert!(!report.rounds.is_empty());
    assert!(x.len() < p.len(), "sampling should not degenerate to the whole input");
    for r in &report.rounds {
        assert!(2 * r.served_weight >= r.remaining_weight || r.attempts == 4);
    }
    let v = gonzalez_kcenter(&p, 2, 0).unwrap().centers;
    let nx = clustering_cost(&p, &x, CostKind::Median).unwrap();
    assert!(nx > 0.0 && nx <= clustering_cost(&p, &v, CostKind::Median).unwrap());
}

#[test]
fn served_half_and_constant_on_tiny_instances() {
    for seed in 0..20 {
        let p = uniform(12, 100 + seed);
        let r = good_subset(&p, 2, 0.2, seed).unwrap();
        assert!(2 * r.served.total_weight() >= p.total_weight());
        let (_, opt) = brute_force_discrete(&r.served, 2, CostKind::Means).unwrap();
        assert!(clustering_cost(&r.served, &r.centers, CostKind::Means).unwrap() <= 32.0 * opt + 1e-9);
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let p = uniform(3000, 4);
    assert_eq!(
        bicriteria_centers(&p, 3, 1.0, 77).unwrap(),
        bicriteria_centers(&p, 3, 1.0, 77).unwrap()
    );
}
