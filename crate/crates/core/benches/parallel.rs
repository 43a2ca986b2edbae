use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use procgen3d::dataset::generate_shape;
use procgen3d::pointops::{chamfer_l2_with, farthest_point_sample, knn_group_with};
use procgen3d::primitives::Vec3;
use procgen3d::procgen::{Complexity, GenConfig};
use procgen3d::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn cloud(seed: u64, n: usize) -> Vec<Vec3> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect()
}

fn chamfer(c: &mut Criterion) {
    let (a, b) = (cloud(1, 4096), cloud(2, 4096));
    let mut g = c.benchmark_group("chamfer_l2_4096");
    for (name, exec) in MODES {
        g.bench_function(name, |bench| bench.iter(|| chamfer_l2_with(black_box(&a), black_box(&b), exec).unwrap()));
    }
    g.finish();
}

fn knn(c: &mut Criterion) {
    let points = cloud(3, 2048);
    let centers = farthest_point_sample(&points, 128, 0).unwrap();
    let mut g = c.benchmark_group("knn_group_2048x128x32");
    for (name, exec) in MODES {
        g.bench_function(name, |bench| bench.iter(|| knn_group_with(black_box(&points), &centers, 32, exec).unwrap()));
    }
    g.finish();
}

fn shapes(c: &mut Criterion) {
    let config = GenConfig::new(Complexity::Augmented).with_seed(5);
    let mut g = c.benchmark_group("generate_tier_d");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 32), &32usize, |bench, &n| {
            bench.iter(|| exec.map_range(0..n, |i| generate_shape(&config, i as u64).unwrap().cloud.len()))
        });
    }
    g.finish();
}

criterion_group!(benches, chamfer, knn, shapes);
criterion_main!(benches);
