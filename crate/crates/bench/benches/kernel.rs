use bipk::engine::{Engine, SelectionPolicy};
use bipk::genom::Variant;
use bipk::verifier::{self, explore, precheck_deadlock};
use bipk_bench::{random_models, scenario, scenario_root, scenario_text};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn front_end(c: &mut Criterion) {
    let root = scenario_root(Variant::Fig12Fixed);
    c.bench_function("flatten/fig12-fixed", |b| b.iter(|| bipk::flatten(black_box(&root)).unwrap()));
    let text = scenario_text(Variant::Fig12Fixed);
    c.bench_function("parse/fig12-fixed", |b| b.iter(|| bipk::dsl::load(black_box(&text)).unwrap()));
}

fn engine(c: &mut Criterion) {
    let m = scenario(Variant::Fig12Fixed);
    c.bench_function("engine/fig12-fixed/1000-steps", |b| {
        b.iter(|| {
            Engine::new(&m, SelectionPolicy::SeededUniform(7))
                .run(m.initial_state(), 1000)
                .unwrap()
        })
    });
}

fn verifier(c: &mut Criterion) {
    let mut g = c.benchmark_group("verifier");
    g.sample_size(10);
    let bug = scenario(Variant::Fig11Bug);
    g.bench_function("explore/fig11-bug", |b| b.iter(|| explore(&bug, verifier::DEFAULT_BOUND).unwrap().len()));
    let safe = scenario(Variant::BatterySafe);
    g.bench_function("precheck/battery-safe", |b| b.iter(|| precheck_deadlock(&safe, Default::default()).unwrap()));
    let randoms = random_models(100);
    g.bench_function("explore/random-100", |b| {
        b.iter(|| randoms.iter().map(|m| explore(m, 100_000).unwrap().len()).sum::<usize>())
    });
    g.finish();
}

criterion_group!(benches, front_end, engine, verifier);
criterion_main!(benches);
