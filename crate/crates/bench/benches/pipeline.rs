use criterion::{criterion_group, criterion_main, Criterion};
use grts_core::geometry::{cell_combinatorics, generator_triple, SchlafliSymbol};
use grts_core::learner::{learn_loop, LearnConfig};
use grts_core::schema::builtin_torus_434;
use grts_core::verifier::verify;

fn bench_geometry(c: &mut Criterion) {
    c.bench_function("generator_triple_435", |b| {
        let sym = SchlafliSymbol::new(4, 3, 5).unwrap();
        b.iter(|| generator_triple(&sym).unwrap())
    });
    c.bench_function("cell_combinatorics_535", |b| {
        let sym = SchlafliSymbol::new(5, 3, 5).unwrap();
        let t = generator_triple(&sym).unwrap();
        b.iter(|| cell_combinatorics(&t).unwrap())
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let schema = builtin_torus_434();
    let mut group = c.benchmark_group("torus_434");
    group.sample_size(10);
    group.bench_function("learn", |b| {
        b.iter(|| learn_loop(&schema, &LearnConfig::default()).unwrap())
    });
    let (rts, _) = learn_loop(&schema, &LearnConfig::default()).unwrap();
    group.bench_function("verify", |b| {
        b.iter(|| verify(&rts, &schema, 100_000, false).unwrap())
    });
    group.bench_function("coordination_100_terms", |b| b.iter(|| rts.coordination(0, 100)));
    group.finish();
}

criterion_group!(benches, bench_geometry, bench_pipeline);
criterion_main!(benches);
