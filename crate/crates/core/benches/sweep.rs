use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ceq::equilibrium::solve_mixed;
use ceq::exec::Execution;
use ceq::pattern::sample_profiles_with;
use ceq::sweep::{default_mprs, run_sweep};
use ceq::Scenario;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sweep(c: &mut Criterion) {
    let sc = Scenario::basic();
    let coarse = default_mprs();
    let fine: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let mut g = c.benchmark_group("sweep");
    for (label, mprs) in [("11", &coarse), ("101", &fine)] {
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, label), mprs, |b, m| {
                b.iter(|| run_sweep(black_box(&sc), m, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let sol = solve_mixed(&Scenario::basic().with_mpr(0.5)).unwrap();
    let mut g = c.benchmark_group("sample_profile");
    for (label, dt) in [("1min", 1.0 / 60.0), ("1s", 1.0 / 3600.0)] {
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, label), &dt, |b, &dt| {
                b.iter(|| sample_profiles_with(black_box(&sol), dt, exec))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, sweep, sampling);
criterion_main!(benches);
