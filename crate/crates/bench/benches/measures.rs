use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tpsim_bench::{planted_network, sources};
use tpsim_core::exact::transition_row;
use tpsim_core::paths::ShortestPathDag;
use tpsim_core::spectral::embed;
use tpsim_core::walk::sample_visits;
use tpsim_core::WalkConfig;

const SIZES: [usize; 3] = [1000, 2000, 4000];

fn per_source(c: &mut Criterion) {
    let cfg = WalkConfig::new(10, 1000, 7);
    let mut group = c.benchmark_group("per_source");
    group.sample_size(10);
    for n in SIZES {
        let g = planted_network(n, n as u64);
        let src = sources(&g, 10);
        group.bench_with_input(BenchmarkId::new("tp_row", n), &g, |b, g| {
            b.iter(|| src.iter().map(|&s| transition_row(g, s, &cfg).unwrap().values[0]).sum::<f64>())
        });
        group.bench_with_input(BenchmarkId::new("etp_visits", n), &g, |b, g| {
            b.iter(|| src.iter().map(|&s| sample_visits(g, s, &cfg).unwrap().total()).sum::<u64>())
        });
        group.bench_with_input(BenchmarkId::new("stp_dag", n), &g, |b, g| {
            b.iter(|| {
                src.iter()
                    .map(|&s| {
                        let dag = ShortestPathDag::build(g, s).unwrap();
                        dag.reached().map(|v| dag.mean_prob(v)).sum::<f64>()
                    })
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    group.sample_size(10);
    for n in [500, 1000] {
        let g = planted_network(n, n as u64);
        group.bench_with_input(BenchmarkId::new("embed_d32", n), &g, |b, g| {
            b.iter(|| embed(g, &WalkConfig::with_t(10), 32).unwrap().dim())
        });
    }
    group.finish();
}

criterion_group!(benches, per_source, spectral);
criterion_main!(benches);
