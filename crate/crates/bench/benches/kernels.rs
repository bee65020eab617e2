use cmla_bench::{encoded_pair, real_table};
use cmla_core::metrics::nearest_real_distances_with;
use cmla_core::{
    asr_curve, auto_eps, coverage_curve, dbscan, euclidean, extract_medoids, DbscanParams,
    SearchMode, ThresholdGrid,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn distance(c: &mut Criterion) {
    let a: Vec<f64> = (0..64).map(|i| i as f64 * 0.1).collect();
    let b: Vec<f64> = (0..64).map(|i| (64 - i) as f64 * 0.1).collect();
    c.bench_function("euclidean_64", |bench| {
        bench.iter(|| euclidean(black_box(&a), black_box(&b)))
    });
}

fn clustering(c: &mut Criterion) {
    let mut g = c.benchmark_group("dbscan");
    g.sample_size(10);
    for n in [1000, 4000] {
        let real = real_table(n, 4, 1);
        let (_, s, _) = encoded_pair(&real, n, 2);
        let params = DbscanParams::fixed(auto_eps(&s, 5).unwrap(), 5);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |bench, s| {
            bench.iter(|| dbscan(s, &params).unwrap())
        });
    }
    g.finish();
}

fn medoids_and_metrics(c: &mut Criterion) {
    let real = real_table(4000, 4, 3);
    let (synth, s, r) = encoded_pair(&real, 2000, 4);
    let labeling = dbscan(&s, &DbscanParams::auto(5)).unwrap();
    c.bench_function("extract_medoids_2000", |bench| {
        bench.iter(|| extract_medoids(&s, &labeling, &synth).unwrap())
    });

    let medoids = extract_medoids(&s, &labeling, &synth).unwrap();
    let grid = ThresholdGrid::default();
    let mut g = c.benchmark_group("nearest_real_4000");
    for mode in [SearchMode::Brute, SearchMode::Indexed] {
        g.bench_function(format!("{mode:?}"), |bench| {
            bench.iter(|| nearest_real_distances_with(&medoids, &r, mode).unwrap())
        });
    }
    g.finish();
    let records = nearest_real_distances_with(&medoids, &r, SearchMode::Auto).unwrap();
    c.bench_function("asr_curve", |bench| {
        bench.iter(|| asr_curve(&records, &grid).unwrap())
    });
    c.bench_function("coverage_curve_4000", |bench| {
        bench.iter(|| coverage_curve(&medoids, &r, &grid).unwrap())
    });
}

criterion_group!(benches, distance, clustering, medoids_and_metrics);
criterion_main!(benches);
