use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use lshade_memetic::polish::{local_minimize, LocalOptConfig};
use lshade_memetic::{run_ea, CrossoverConfig, EAConfig, EvalCounter, Evaluator, RunRng};
use lshade_memetic_bench::{instance, points, smooth_instance};
use rand::SeedableRng;

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for (dim, comps) in [(10, 1), (30, 1), (30, 5)] {
        let inst = instance(dim, comps);
        let xs = points(&inst, 256, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("d{dim}_c{comps}")), &xs, |b, xs| {
            let mut counter = EvalCounter::new(u64::MAX);
            let mut k = 0;
            b.iter(|| {
                k = (k + 1) % xs.len();
                black_box(inst.evaluate(&xs[k], &mut counter).unwrap())
            })
        });
    }
    group.finish();
}

fn short_ea(c: &mut Criterion) {
    let inst = instance(10, 3);
    let cfg = EAConfig::default();
    let crossover = CrossoverConfig::default();
    c.bench_function("run_ea_d10_20k", |b| {
        b.iter_batched(
            || RunRng::seed_from_u64(3),
            |mut rng| {
                let mut eval = Evaluator::new(&inst, 20_000);
                run_ea(&mut eval, 20_000, &cfg, &crossover, &mut rng).unwrap().best_f
            },
            BatchSize::SmallInput,
        )
    });
}

fn polish(c: &mut Criterion) {
    let inst = smooth_instance(30);
    let x0 = points(&inst, 1, 5).remove(0);
    let cfg = LocalOptConfig::default();
    c.bench_function("local_minimize_d30", |b| {
        b.iter(|| {
            let r = local_minimize(|x| Ok(inst.value(x)), black_box(&x0), inst.bounds(), 20_000, &cfg);
            black_box(r.f)
        })
    });
}

criterion_group!(benches, evaluate, short_ea, polish);
criterion_main!(benches);
