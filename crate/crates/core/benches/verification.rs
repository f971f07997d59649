use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lsl_core::morse::{flow_limit, Direction, FlowSpec};
use lsl_core::par::{map_indexed, map_indexed_seq};
use lsl_core::sampling::{random_unitary, rng_for};
use lsl_core::spectral::{maslov_index, random_loop};

fn classify_one(n: usize, k: usize) -> bool {
    let spec = FlowSpec::default_for(n);
    let s = random_unitary(&mut rng_for(1, k as u64), n);
    flow_limit(&s, &spec, Direction::Backward).is_ok()
}

fn maslov_one(n: usize, k: usize) -> i64 {
    let (lp, _) = random_loop(&mut rng_for(2, k as u64), n, 500).expect("valid loop");
    maslov_index(&lp).unwrap_or(0)
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_limit_batch");
    for n in [2usize, 4] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| map_indexed(64, |k| classify_one(n, k)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_indexed_seq(64, |k| classify_one(n, k)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("maslov_batch");
    group.sample_size(20);
    for n in [2usize, 4] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| map_indexed(16, |k| maslov_one(n, k)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_indexed_seq(16, |k| maslov_one(n, k)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
