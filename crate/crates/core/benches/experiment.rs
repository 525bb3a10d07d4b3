use criterion::{criterion_group, criterion_main, Criterion};
use marl_shaping::bench::{run_seeds, Benchmark, Execution, Mode, TrainingSettings};

fn seeds(c: &mut Criterion) {
    let mut b = Benchmark::builtin("buttons-prime").unwrap();
    b.episodes = 500;
    let settings = TrainingSettings::for_benchmark(&b);
    let seeds = [1, 2, 3, 4];
    let mut group = c.benchmark_group("buttons-prime 500 episodes x 4 seeds");
    group.sample_size(10);
    group.bench_function("sequential", |bench| {
        bench.iter(|| run_seeds(&b, Mode::Shaped, &settings, &seeds, Execution::Sequential).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |bench| {
        bench.iter(|| run_seeds(&b, Mode::Shaped, &settings, &seeds, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, seeds);
criterion_main!(benches);
