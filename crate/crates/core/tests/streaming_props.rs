use kcoreset::streaming::DEFAULT_SCHEDULE_CONSTANT;
use kcoreset::{
    certify_coreset, clustering_cost, generate_instance, kmedian_approx, CostKind, InstanceSpec, PointAccess, Shape,
    StreamConfig, StreamState, WeightedPointSet,
};
use proptest::prelude::*;

fn state(m: usize, kind: CostKind) -> StreamState {
    StreamState::new(StreamConfig::with_base(2, 0.2, 2, kind, m, DEFAULT_SCHEDULE_CONSTANT, 3).unwrap())
}

fn blobs(n: usize, seed: u64) -> WeightedPointSet {
    generate_instance(&InstanceSpec {
        n,
        dim: 2,
        seed,
        shape: Shape::Blobs {
            blobs: 3,
            separation: 30.0,
            sigma: 3.0,
        },
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn counter_and_weight_hold_after_every_insert(
        m in 2usize..12,
        rows in prop::collection::vec((prop::collection::vec(-50.0f64..50.0, 2), 1u64..4), 1..150),
    ) {
        let mut s = state(m, CostKind::Median);
        let mut weight = 0;
        for (i, (p, w)) in rows.iter().enumerate() {
            s.insert_weighted(p, *w).unwrap();
            weight += w;
            s.check_invariants().unwrap();
            let full = (i + 1) / m;
            let expect: Vec<usize> = (0..16).filter(|b| full >> b & 1 == 1).map(|b| b + 1).collect();
            prop_assert_eq!(s.ranks(), expect);
            prop_assert_eq!(s.buffer().len(), (i + 1) % m);
            prop_assert_eq!(s.extract_coreset().set.total_weight(), weight);
        }
        for b in s.buckets() {
            prop_assert!(b.factor <= 1.0 + 0.2 / 2.0);
        }
        prop_assert!(s.maintenance_factor() <= (1.0 + 0.1) * (1.0 + 0.2 / 6.0) + 1e-12);
    }
}

#[test]
fn promotions_follow_binary_counting() {
    let m = 16;
    let p = blobs(5 * m, 1);
    let mut s = state(m, CostKind::Median);
    for i in 0..m - 1 {
        s.insert(p.point(i)).unwrap();
    }
    assert_eq!(s.buffer().len(), m - 1);
    assert!(s.ranks().is_empty());
    s.insert(p.point(m - 1)).unwrap();
    assert_eq!(s.ranks(), vec![1]);
    assert!(s.buffer().is_empty());
    for i in m..2 * m {
        s.insert(p.point(i)).unwrap();
    }
    let b: Vec<_> = s.buckets().collect();
    assert_eq!(b.len(), 1);
    assert_eq!((b[0].rank, b[0].represented), (2, 2 * m as u64));
    for i in 2 * m..5 * m {
        s.insert(p.point(i)).unwrap();
    }
    assert_eq!(s.ranks(), vec![1, 3]);
    assert!(s.buffer().is_empty());
}

#[test]
fn extracted_union_certifies_against_the_full_stream() {
    let p = blobs(3000, 2);
    for kind in [CostKind::Median, CostKind::Means] {
        let mut s = state(100, kind);
        for i in 0..p.len() {
            s.insert(p.point(i)).unwrap();
        }
        let e = s.extract_coreset();
        assert_eq!(e.set.total_weight(), 3000);
        let r = certify_coreset(&p, &e, 2, 0.2, 100, 11).unwrap();
        assert!(r.pass, "{kind}: {}", r.max_deviation);
    }
}

#[test]
fn coincident_clusters_recovered_in_any_order() {
    let mut rows = Vec::new();
    for i in 0..400 {
        rows.push(vec![(i * 7 % 3) as f64 * 40.0, 5.0]);
    }
    let mut s = StreamState::new(StreamConfig::with_base(3, 0.2, 2, CostKind::Means, 64, 10.0, 1).unwrap());
    for r in rows.iter().rev() {
        s.insert(r).unwrap();
    }
    let (c, report) = s.query_clustering(CostKind::Means).unwrap();
    assert_eq!(report.cost, 0.0);
    assert_eq!(c.len(), 3);
}

#[test]
fn streamed_and_batch_pipelines_agree() {
    let p = blobs(600, 9);
    let mut s = StreamState::new(StreamConfig::with_base(2, 0.2, 2, CostKind::Median, 64, 10.0, 5).unwrap());
    for i in 0..p.len() {
        s.insert(p.point(i)).unwrap();
    }
    let (c, _) = s.query_clustering(CostKind::Median).unwrap();
    let streamed = clustering_cost(&p, &c, CostKind::Median).unwrap();
    let batch = kmedian_approx(&p, 2, 0.2, 5).unwrap().report.cost;
    assert!(streamed <= 1.2 * batch && batch <= 1.2 * streamed, "{streamed} vs {batch}");
}

#[test]
fn replay_is_deterministic() {
    let p = blobs(700, 4);
    let run = || {
        let mut s = state(50, CostKind::Means);
        for i in 0..p.len() {
            s.insert(p.point(i)).unwrap();
        }
        s.extract_coreset().set
    };
    assert_eq!(run(), run());
}
