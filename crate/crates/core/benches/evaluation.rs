use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use braidorbit::nbody::{ActionEvaluator, ProblemSpec};
use braidorbit::Execution;

fn action_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("action_and_gradient");
    group.sample_size(20);
    for (n, p) in [(2, 1), (4, 1), (5, 2)] {
        let spec = ProblemSpec::new(n, p).unwrap();
        let lp = braidorbit::nbody::solver::initial_guess(&spec, 1).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let ev = ActionEvaluator::new(&lp, spec.quadrature_samples, 1e-3)
                .unwrap()
                .with_execution(exec);
            let id = BenchmarkId::new(format!("{exec:?}"), format!("n{n}p{p}"));
            group.bench_with_input(id, &lp, |b, lp| {
                b.iter(|| ev.action_and_gradient(black_box(lp)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, action_gradient);
criterion_main!(benches);
