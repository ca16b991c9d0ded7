use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use polysparse::bp::{self, BpConfig, BpMethod};
use polysparse::greedy::{self, GreedyConfig};
use polysparse::{GroupStructure, MonomialBasis};
use polysparse_bench::instance;

fn lifting(c: &mut Criterion) {
    let mut g = c.benchmark_group("lift");
    for (n, d) in [(20, 2), (10, 3), (5, 4)] {
        let basis = MonomialBasis::new(n, d).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.4).collect();
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_d{d}")), &x, |b, x| {
            b.iter(|| basis.lift(black_box(x)).unwrap())
        });
    }
    g.finish();
}

fn grouping(c: &mut Criterion) {
    let inst = instance(20, 2, 25, 3, 1);
    c.bench_function("group_build/n20_d2", |b| {
        b.iter(|| GroupStructure::build(black_box(inst.system.basis()), inst.system.a()).unwrap())
    });
}

fn convex(c: &mut Criterion) {
    let mut g = c.benchmark_group("bp");
    g.sample_size(10);
    let inst = instance(20, 2, 25, 3, 2);
    for method in [BpMethod::GroupL1L2, BpMethod::IRGroupL1L2, BpMethod::SelGroupL1L2] {
        let cfg = BpConfig::with_method(method);
        g.bench_function(format!("{method:?}/n20_d2_N25_k3"), |b| {
            b.iter(|| bp::solve(black_box(&inst.system), &cfg).unwrap())
        });
    }
    g.finish();
}

fn greedy_methods(c: &mut Criterion) {
    let mut g = c.benchmark_group("greedy");
    g.sample_size(20);
    let cfg = GreedyConfig::default();
    for k in [1, 2, 3] {
        let inst = instance(20, 2, 25, k, 3);
        g.bench_with_input(BenchmarkId::new("aga", k), &inst, |b, inst| {
            b.iter(|| greedy::aga(black_box(&inst.system), &cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("ega", k), &inst, |b, inst| {
            b.iter(|| greedy::ega(black_box(&inst.system), &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lifting, grouping, convex, greedy_methods);
criterion_main!(benches);
