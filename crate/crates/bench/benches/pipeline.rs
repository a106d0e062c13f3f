use criterion::{criterion_group, criterion_main, Criterion};

use rtlopt_bench::desk_corpus;
use rtlopt_core::pipeline::{bench, collect_cases, run_pipeline, PipelineConfig};

fn desk(c: &mut Criterion) {
    let dir = desk_corpus();
    let cfg = PipelineConfig::default();
    let cases = collect_cases(&dir).unwrap();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.bench_function("single case", |b| b.iter(|| run_pipeline(&cases[..1], &cfg).unwrap()));
    g.bench_function("desk corpus", |b| b.iter(|| bench(&dir, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, desk);
criterion_main!(benches);
