use std::time::Duration;

use cpsearch::experiment::{run_experiment, Benchmark, Execution, Restarts, RunConfig};
use cpsearch::heuristics::HeuristicKind;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn config(bench: Benchmark, kind: HeuristicKind, execution: Execution) -> RunConfig {
    let mut c = RunConfig::new(bench, kind);
    c.runs = 16;
    c.timeout = Duration::from_secs(30);
    c.restarts = Restarts::Geometric(1.1);
    c.execution = execution;
    c
}

fn runner(c: &mut Criterion) {
    let mut group = c.benchmark_group("runner");
    group.sample_size(10);
    let cases = [
        (Benchmark::MagicSquare(6), HeuristicKind::Abs),
        (Benchmark::KnapsackCop("1-3".into()), HeuristicKind::Ibs),
    ];
    for (bench, kind) in cases {
        let label = format!("{bench}-{kind}");
        for (name, execution) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel { threads: None }),
        ] {
            let cfg = config(bench.clone(), kind, execution);
            group.bench_with_input(BenchmarkId::new(name, &label), &cfg, |b, cfg| {
                b.iter(|| run_experiment(cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, runner);
criterion_main!(benches);
