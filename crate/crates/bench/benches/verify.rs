use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lbemc_core::cfa::summarize;
use lbemc_core::frontend::compile;
use lbemc_core::workloads::gen_test_locks;
use lbemc_core::{verify, AbstractionMode, Config, Encoding};

fn encodings(c: &mut Criterion) {
    let mut g = c.benchmark_group("test_locks");
    g.sample_size(10);
    for n in [2, 4, 6, 8] {
        let p = compile(&gen_test_locks(n, false).unwrap()).unwrap();
        let lbe = Config::default();
        g.bench_with_input(BenchmarkId::new("lbe_boolean", n), &p, |b, p| b.iter(|| verify(p, &lbe)));
        if n <= 4 {
            let sbe = Config {
                encoding: Encoding::Sbe,
                mode: AbstractionMode::Cartesian,
                ..Config::default()
            };
            g.bench_with_input(BenchmarkId::new("sbe_cartesian", n), &p, |b, p| b.iter(|| verify(p, &sbe)));
        }
    }
    g.finish();
}

fn summarization(c: &mut Criterion) {
    let p = compile(&gen_test_locks(10, false).unwrap()).unwrap();
    c.bench_function("summarize test_locks_10", |b| b.iter(|| summarize(&p)));
}

criterion_group!(benches, encodings, summarization);
criterion_main!(benches);
