use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polyrec_core::datagen::{render_all, render_wholes, GenerationConfig};
use polyrec_core::Workers;

fn config(per_class: usize) -> GenerationConfig {
    GenerationConfig {
        per_class_whole: per_class,
        ..GenerationConfig::default()
    }
}

fn workers() -> Vec<(&'static str, Workers)> {
    let mut out = vec![("serial", Workers::SERIAL)];
    if cfg!(feature = "parallel") {
        out.push(("parallel", Workers::AUTO));
    }
    out
}

fn wholes(c: &mut Criterion) {
    let cfg = config(100);
    let mut group = c.benchmark_group("render_wholes");
    group.sample_size(10);
    group.throughput(Throughput::Elements(
        (cfg.classes.len() * cfg.per_class_whole) as u64,
    ));
    for (name, w) in workers() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &w, |b, &w| {
            b.iter(|| render_wholes(&cfg, w).unwrap())
        });
    }
    group.finish();
}

fn full_cells(c: &mut Criterion) {
    let cfg = config(10);
    let mut group = c.benchmark_group("render_all");
    group.sample_size(10);
    group.throughput(Throughput::Elements(cfg.expected_record_count() as u64));
    for (name, w) in workers() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &w, |b, &w| {
            b.iter(|| render_all(&cfg, w).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, wholes, full_cells);
criterion_main!(benches);
