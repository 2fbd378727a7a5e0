use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tfstab::grid::{composite_init, weighted_norm, CompositeParams};
use tfstab::nonlinear::{eval_n, DEFAULT_LIPSCHITZ_THRESHOLD};
use tfstab::resolvent::{manufactured_rhs, DiscreteOperator};
use tfstab::NormSpec;
use tfstab_bench::{grid, perturbation};

const SIZES: [usize; 3] = [257, 1025, 4097];

fn bench_operator(c: &mut Criterion) {
    let mut g = c.benchmark_group("operator");
    for n in SIZES {
        let grid = grid(n).unwrap();
        g.bench_with_input(BenchmarkId::new("assemble", n), &grid, |b, &grid| {
            b.iter(|| DiscreteOperator::assemble(black_box(grid)).unwrap())
        });
        let op = DiscreteOperator::assemble(grid).unwrap();
        g.bench_with_input(BenchmarkId::new("factorize", n), &op, |b, op| {
            b.iter(|| op.resolvent(black_box(100.0)).unwrap())
        });
        let solver = op.resolvent(100.0).unwrap();
        let rhs = grid.sample(|x| manufactured_rhs(100.0, x));
        g.bench_with_input(BenchmarkId::new("solve", n), &rhs, |b, rhs| {
            b.iter(|| solver.solve_raw(black_box(rhs)).unwrap())
        });
    }
    g.finish();
}

fn bench_norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("norms");
    let grid = grid(1025).unwrap();
    let u = perturbation(&grid, 1e-3);
    for k in [0usize, 2, 4] {
        g.bench_with_input(BenchmarkId::new("weighted", k), &k, |b, &k| {
            b.iter(|| weighted_norm(black_box(&u), NormSpec::new(k, 0.25)).unwrap())
        });
    }
    let params = CompositeParams {
        n: 1,
        k: 3,
        delta: 0.25,
    };
    g.bench_function("composite_init", |b| b.iter(|| composite_init(black_box(&u), params).unwrap()));
    g.finish();
}

fn bench_nonlinearity(c: &mut Criterion) {
    let mut g = c.benchmark_group("nonlinearity");
    for n in SIZES {
        let u = perturbation(&grid(n).unwrap(), 1e-3);
        g.bench_with_input(BenchmarkId::new("eval_n", n), &u, |b, u| {
            b.iter(|| eval_n(black_box(u), DEFAULT_LIPSCHITZ_THRESHOLD).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_operator, bench_norms, bench_nonlinearity);
criterion_main!(benches);
