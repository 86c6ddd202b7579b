mod common;

use common::weighted_set;
use itertools::Itertools;
use kcoreset::centroid::is_subset_of;
use kcoreset::rng::seeded;
use kcoreset::{
    brute_force_discrete, clustering_cost, discrete_kmedian_approx, discrete_median_centroid_set, generate_instance,
    kmeans_approx, kmedian_approx, means_centroid_set, median_centroid_set, solve_by_enumeration, CenterSet, Coreset,
    CostKind, InstanceSpec, PointAccess, Shape, WeightedPointSet,
};
use proptest::prelude::*;
use rand::Rng;

/// Cheapest k-subset of `u`, priced on `p`, by plain enumeration.
fn best_over(u: &CenterSet, p: &WeightedPointSet, k: usize, kind: CostKind) -> f64 {
    if u.len() <= k {
        return clustering_cost(p, u, kind).unwrap();
    }
    (0..u.len())
        .combinations(k)
        .map(|c| clustering_cost(p, &u.select(&c), kind).unwrap())
        .fold(f64::INFINITY, f64::min)
}

fn small(n: usize, dim: usize, seed: u64) -> WeightedPointSet {
    generate_instance(&InstanceSpec {
        n,
        dim,
        seed,
        shape: Shape::Blobs {
            blobs: 2,
            separation: 10.0,
            sigma: 2.0,
        },
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn enumeration_equals_plain_enumeration(
        u in common::centers(2, 9, 10.0),
        p in weighted_set(2, 25, 10.0),
        k in 1usize..4,
        means in any::<bool>(),
    ) {
        let kind = if means { CostKind::Means } else { CostKind::Median };
        prop_assume!(u.len() >= k);
        let e = solve_by_enumeration(&u, &p, k, kind).unwrap();
        let oracle = best_over(&u, &p, k, kind);
        prop_assert!((e.cost - oracle).abs() <= 1e-9 * oracle.max(1.0));
        prop_assert_eq!(e.cost, clustering_cost(&p, &e.centers, kind).unwrap());
        prop_assert!(e.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn discrete_candidates_are_inputs(p in weighted_set(2, 40, 20.0), seed in any::<u64>()) {
        let d = discrete_median_centroid_set(&p, 2, 0.3, seed).unwrap();
        prop_assert!(d.discrete);
        prop_assert!(is_subset_of(&d.candidates, &p));
    }
}

#[test]
fn enumeration_beats_random_subsets() {
    let p = small(200, 2, 5);
    let s = Coreset::exact(&p, 3, CostKind::Median);
    let u = median_centroid_set(&p, 3, 0.5, 1).unwrap();
    let e = solve_by_enumeration(&u.candidates, &s.set, 3, CostKind::Median).unwrap();
    let mut rng = seeded(3);
    for _ in 0..1000 {
        let idx: Vec<usize> = (0..3).map(|_| rng.random_range(0..u.len())).collect();
        let c = u.candidates.select(&idx);
        assert!(e.cost <= clustering_cost(&p, &c, CostKind::Median).unwrap() + 1e-9);
    }
}

#[test]
fn median_candidates_contain_a_near_optimal_pair() {
    for seed in 0..10 {
        let p = small(12, 1, seed);
        let (_, opt) = brute_force_discrete(&p, 2, CostKind::Median).unwrap();
        for (eps, discrete) in [(0.25, false), (0.25, true)] {
            let u = if discrete {
                discrete_median_centroid_set(&p, 2, eps, seed).unwrap()
            } else {
                median_centroid_set(&p, 2, eps, seed).unwrap()
            };
            let best = best_over(&u.candidates, &p, 2, CostKind::Median);
            assert!(best <= (1.0 + eps) * opt + 1e-9, "seed {seed}: {best} vs {opt}");
        }
    }
}

#[test]
fn means_candidates_on_two_blobs() {
    for seed in 0..10 {
        let p = small(12, 2, 50 + seed);
        let (_, opt) = brute_force_discrete(&p, 2, CostKind::Means).unwrap();
        let u = means_centroid_set(&Coreset::exact(&p, 2, CostKind::Means), 2, 0.2).unwrap();
        let best = best_over(&u.candidates, &p, 2, CostKind::Means);
        assert!(best <= 1.2 * opt + 1e-9, "seed {seed}: {best} vs {opt}");
    }
}

#[test]
fn smaller_eps_never_shrinks_the_candidate_pool() {
    let p = small(12, 2, 7);
    let s = Coreset::exact(&p, 2, CostKind::Means);
    let mut last = (0, 0);
    let mut used = (f64::INFINITY, f64::INFINITY);
    for eps in [0.8, 0.4, 0.2, 0.1, 0.05] {
        let d = median_centroid_set(&p, 2, eps, 1).unwrap();
        let m = means_centroid_set(&s, 2, eps).unwrap();
        // coarsening may cap the pool, but a finer request never builds a coarser grid
        assert!(d.len() >= last.0 && m.len() >= last.1, "eps {eps}");
        assert!(d.eps_used <= used.0 && m.eps_used <= used.1);
        last = (d.len(), m.len());
        used = (d.eps_used, m.eps_used);
    }
}

#[test]
fn coincident_inputs_collapse() {
    let p = WeightedPointSet::from_weighted_rows(&[(vec![3.0, 3.0], 4), (vec![3.0, 3.0], 2)]).unwrap();
    let u = means_centroid_set(&Coreset::exact(&p, 1, CostKind::Means), 1, 0.2).unwrap();
    assert_eq!(u.len(), 1);
    let d = discrete_median_centroid_set(&p, 1, 0.2, 0).unwrap();
    assert_eq!(d.candidates.rows(), vec![vec![3.0, 3.0]]);
}

#[test]
fn heavy_pair_is_recovered() {
    let p = WeightedPointSet::from_weighted_rows(&[(vec![0.0, 0.0], 50), (vec![7.0, 1.0], 80)]).unwrap();
    let u = median_centroid_set(&p, 2, 0.2, 3).unwrap();
    assert!(u.candidates.contains(&[0.0, 0.0]) && u.candidates.contains(&[7.0, 1.0]));
    let e = solve_by_enumeration(&u.candidates, &p, 2, CostKind::Median).unwrap();
    assert_eq!(e.cost, 0.0);
}

#[test]
fn separated_coincident_clusters_are_exact() {
    let p = generate_instance(&InstanceSpec {
        n: 300,
        dim: 2,
        seed: 2,
        shape: Shape::Coincident {
            clusters: 3,
            separation: 50.0,
        },
    })
    .unwrap();
    for res in [
        kmedian_approx(&p, 3, 0.3, 1).unwrap(),
        kmeans_approx(&p, 3, 0.3, 1).unwrap(),
        discrete_kmedian_approx(&p, 3, 0.3, 1).unwrap(),
    ] {
        assert_eq!(res.report.cost, 0.0);
        assert!(res.report.ledger_factor <= 1.3);
    }
}

#[test]
fn well_separated_blobs_pay_only_within_blob_cost() {
    let sigma: f64 = 1.0;
    let p = generate_instance(&InstanceSpec {
        n: 300,
        dim: 2,
        seed: 6,
        shape: Shape::Blobs {
            blobs: 2,
            separation: 100.0,
            sigma,
        },
    })
    .unwrap();
    let r = kmeans_approx(&p, 2, 0.2, 4).unwrap();
    // E|x - mean|^2 = d sigma^2 per point
    let expected = 300.0 * 2.0 * sigma * sigma;
    assert!(r.report.cost < 1.5 * expected, "{} vs {expected}", r.report.cost);
    let xs: Vec<i64> = r.centers.iter().map(|c| (c[0] / 100.0).round() as i64).sorted().collect();
    assert_eq!(xs, vec![0, 1]);
}
