use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use kcoreset::bicriteria::DEFAULT_GAMMA;
use kcoreset::coreset::DEFAULT_APPROX_FACTOR;
use kcoreset::fuzzy_nn::DEFAULT_R;
use kcoreset::{
    bicriteria_centers, build_coreset, build_index, kmedian_approx, CostKind, FuzzyConfig, PointAccess, StreamConfig,
    StreamState,
};
use kcoreset_bench::{blobs, uniform_sites};
use std::hint::black_box;

fn coreset_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("coreset_build");
    for n in [1000usize, 4000] {
        let p = blobs(n, 1);
        let a = bicriteria_centers(&p, 3, DEFAULT_GAMMA, 2).unwrap();
        g.bench_with_input(BenchmarkId::new("bicriteria", n), &p, |b, p| {
            b.iter(|| bicriteria_centers(p, 3, DEFAULT_GAMMA, 2).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("grid_snap", n), &p, |b, p| {
            b.iter(|| build_coreset(p, &a, DEFAULT_APPROX_FACTOR, 3, 0.2, CostKind::Median).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let p = blobs(12, 3);
    c.bench_function("kmedian_pipeline_n12_k2", |b| b.iter(|| kmedian_approx(&p, 2, 0.2, 4).unwrap()));
}

fn fuzzy_query(c: &mut Criterion) {
    let x = uniform_sites(1000, 10.0, 5);
    let ix = build_index(&x, FuzzyConfig::new(1e-3, 8.0, 0.1, DEFAULT_R).unwrap()).unwrap();
    let q = uniform_sites(1024, 10.0, 6);
    let mut i = 0;
    c.bench_function("fuzzy_query_1000_sites", |b| {
        b.iter(|| {
            i = (i + 1) % q.len();
            black_box(ix.query(q.point(i)))
        })
    });
}

fn streaming_insert(c: &mut Criterion) {
    let p = blobs(2000, 7);
    c.bench_function("stream_2000_points", |b| {
        b.iter_batched(
            || StreamState::new(StreamConfig::new(2, 0.2, 2, CostKind::Median, 1).unwrap()),
            |mut s| {
                for i in 0..p.len() {
                    s.insert(p.point(i)).unwrap();
                }
                s
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = coreset_build, pipeline, fuzzy_query, streaming_insert
}
criterion_main!(benches);
