mod common;

use common::{lattice_set, weighted_set};
use kcoreset::coreset::{displacement_bound, DEFAULT_APPROX_FACTOR};
use kcoreset::harness::relative_deviation;
use kcoreset::{
    bicriteria_centers, build_coreset, build_coreset_detailed, build_exponential_grid, certify_coreset, clustering_cost,
    distance, generate_instance, snap_cell, CenterSet, CostKind, InstanceSpec, PointAccess, Shape, WeightedPointSet,
};
use proptest::prelude::*;

/// Ring and lattice cell found by walking the rings outward one at a time.
fn slow_snap(center: &[f64], radius: f64, eps: f64, c: f64, outer: u32, p: &[f64]) -> Option<(u32, Vec<i64>)> {
    let d = center.len() as f64;
    let cheb = p.iter().zip(center).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut ring = None;
    for j in 0..=outer {
        let half = radius * 2f64.powi(j as i32) / 2.0;
        if cheb <= half {
            ring = Some(j);
            break;
        }
    }
    let j = ring?;
    let side = eps * radius * 2f64.powi(j as i32) / (10.0 * c * d);
    Some((j, p.iter().zip(center).map(|(x, o)| ((x - o) / side).floor() as i64).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snap_matches_ring_scan(
        center in prop::collection::vec(-5.0f64..5.0, 1..4),
        radius in 0.01f64..3.0,
        eps in 0.01f64..0.99,
        offs in prop::collection::vec(-1.0f64..1.0, 3),
        scale_exp in 0i32..20,
    ) {
        let g = build_exponential_grid(&center, radius, eps, 32.0, 1000).unwrap();
        let reach = radius * 2f64.powi(scale_exp) / 2.0;
        let p: Vec<f64> = center.iter().zip(offs.iter().cycle()).map(|(c, o)| c + o * reach).collect();
        let key = snap_cell(&g, 4, &p).unwrap();
        let (ring, lattice) = slow_snap(&center, radius, eps, 32.0, g.outer_ring, &p).unwrap();
        prop_assert_eq!(key.center, 4);
        prop_assert_eq!(key.ring, ring);
        prop_assert_eq!(key.lattice, lattice);
    }

    #[test]
    fn weights_subset_and_displacement(
        p in weighted_set(2, 120, 30.0),
        k in 1usize..4,
        eps in 0.05f64..0.9,
        seed in any::<u64>(),
        means in any::<bool>(),
    ) {
        let kind = if means { CostKind::Means } else { CostKind::Median };
        let a = bicriteria_centers(&p, k, 4.0, seed).unwrap();
        let b = build_coreset_detailed(&p, &a, DEFAULT_APPROX_FACTOR, k, eps, kind).unwrap();
        let s = &b.coreset;
        prop_assert_eq!(s.set.total_weight(), p.total_weight());
        prop_assert_eq!(s.source_total_weight, p.total_weight());
        let inputs: std::collections::HashSet<Vec<u64>> =
            p.iter().map(|(x, _)| x.iter().map(|c| c.to_bits()).collect()).collect();
        for (x, _) in s.set.iter() {
            prop_assert!(inputs.contains(&x.iter().map(|c| c.to_bits()).collect::<Vec<_>>()));
        }
        let mut acc = vec![0u64; s.len()];
        for i in 0..p.len() {
            let r = b.representative[i];
            acc[r] += p.weight(i);
            let moved = distance(p.point(i), s.set.point(r));
            let bound = displacement_bound(eps, DEFAULT_APPROX_FACTOR, 2, b.radius, b.assigned_distance[i]);
            prop_assert!(moved <= bound * (1.0 + 1e-9) + 1e-12, "moved {} > {}", moved, bound);
        }
        prop_assert_eq!(acc, s.set.weights().to_vec());
    }

    #[test]
    fn zero_cost_centers_give_distinct_points(p in lattice_set(2, 40, 3), means in any::<bool>()) {
        let kind = if means { CostKind::Means } else { CostKind::Median };
        let a = p.distinct().to_centers();
        let s = build_coreset(&p, &a, 32.0, 2, 0.3, kind).unwrap();
        prop_assert_eq!(&s.set, &p.distinct());
    }
}

fn uniform(n: usize, seed: u64) -> WeightedPointSet {
    generate_instance(&InstanceSpec {
        n,
        dim: 2,
        seed,
        shape: Shape::Uniform { side: 1.0 },
    })
    .unwrap()
}

#[test]
fn unit_square_coreset_certifies_both_kinds() {
    let p = uniform(1000, 21);
    for kind in [CostKind::Median, CostKind::Means] {
        let a = bicriteria_centers(&p, 3, 4.0, 5).unwrap();
        let s = build_coreset(&p, &a, DEFAULT_APPROX_FACTOR, 3, 0.2, kind).unwrap();
        let r = certify_coreset(&p, &s, 3, 0.2, 100, 9).unwrap();
        assert!(r.pass, "{kind}: max deviation {}", r.max_deviation);
        assert_eq!(r.passed, 100);
    }
}

#[test]
fn coreset_of_coreset_composes() {
    let p = generate_instance(&InstanceSpec {
        n: 1500,
        dim: 2,
        seed: 4,
        shape: Shape::Blobs {
            blobs: 4,
            separation: 20.0,
            sigma: 2.0,
        },
    })
    .unwrap();
    let (e1, e2) = (0.1, 0.15);
    for kind in [CostKind::Median, CostKind::Means] {
        let a = bicriteria_centers(&p, 4, 4.0, 1).unwrap();
        let s1 = build_coreset(&p, &a, DEFAULT_APPROX_FACTOR, 4, e1, kind).unwrap();
        let a2 = bicriteria_centers(&s1.set, 4, 4.0, 2).unwrap();
        let s2 = build_coreset(&s1.set, &a2, DEFAULT_APPROX_FACTOR, 4, e2, kind).unwrap();
        assert_eq!(s2.set.total_weight(), p.total_weight());
        let tol = (1.0 + e1) * (1.0 + e2) - 1.0;
        let r = certify_coreset(&p, &s2, 4, tol, 60, 3).unwrap();
        assert!(r.pass, "{kind}: {} > {tol}", r.max_deviation);
    }
}

#[test]
fn single_heavy_point() {
    let p = WeightedPointSet::from_weighted_rows(&[(vec![2.0, -1.0], 7)]).unwrap();
    let a = CenterSet::from_rows(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
    for kind in [CostKind::Median, CostKind::Means] {
        let s = build_coreset(&p, &a, 32.0, 2, 0.1, kind).unwrap();
        assert_eq!(s.set, p);
    }
}

#[test]
fn deviation_stays_within_eps_across_precisions() {
    let p = uniform(3000, 8);
    let a = bicriteria_centers(&p, 2, 4.0, 3).unwrap();
    let c = CenterSet::from_rows(&[[0.25, 0.25], [0.75, 0.7]]).unwrap();
    for eps in [0.5, 0.2, 0.05] {
        let s = build_coreset(&p, &a, DEFAULT_APPROX_FACTOR, 2, eps, CostKind::Median).unwrap();
        let dev = relative_deviation(&p, &s.set, &c, CostKind::Median).unwrap();
        assert!(dev <= eps, "eps {eps}: deviation {dev}");
        assert!(clustering_cost(&s.set, &c, CostKind::Median).unwrap() > 0.0);
    }
}
