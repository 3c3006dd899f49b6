use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use calibmatch::{
    check_exact, edge_count, exact_max_weight_matching, greedy_matching, iteration_bound,
    mse_potential, weighted_mc, CalibrationParams,
};
use calibmatch_bench::{matching_workload, random_weights};

fn bench_matching_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching");
    for nodes in [8usize, 12, 16] {
        let weights = random_weights(nodes as u64, edge_count(nodes));
        group.bench_function(format!("exact/n{nodes}"), |b| {
            b.iter(|| exact_max_weight_matching(nodes, black_box(&weights)).unwrap())
        });
    }
    let weights = random_weights(16, edge_count(16));
    group.bench_function("greedy/n16", |b| {
        b.iter(|| greedy_matching(16, black_box(&weights)).unwrap())
    });
    group.finish();
}

fn bench_check_exact(c: &mut Criterion) {
    let (scenario, weights) = matching_workload();
    c.bench_function("check_exact/matching-n4-k8", |b| {
        b.iter(|| check_exact(&scenario.dist, black_box(&scenario.gamma), &weights, 1e-6).unwrap())
    });
}

fn bench_weighted_mc(c: &mut Criterion) {
    let (scenario, weights) = matching_workload();
    let m = scenario.problem.m();
    let alpha = 0.1 / (2.0 * m as f64);
    let r = mse_potential(&scenario.dist, &scenario.gamma).unwrap();
    let params = CalibrationParams::exact(alpha, iteration_bound(r, m, alpha)).unwrap();
    c.bench_function("weighted_mc/matching-n4-k8-eps0.1", |b| {
        b.iter(|| {
            weighted_mc(
                &scenario.dist,
                black_box(&scenario.gamma),
                &weights,
                &params,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_matching_solvers,
    bench_check_exact,
    bench_weighted_mc
);
criterion_main!(benches);
