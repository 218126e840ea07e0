use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use conflow_bench::{decaying_state, pair_fixture};
use conflow_core::flow::flow_rhs;
use conflow_core::solver::{branch_predictor, newton_refine};
use conflow_core::spectral::{assemble_hessians, sym_eigs};
use conflow_core::{BaseMode, BranchId, BranchSpec};

fn rhs(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_rhs");
    for n in [16, 32, 64] {
        let s = decaying_state(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| flow_rhs(black_box(s))));
    }
    g.finish();
}

fn hessians(c: &mut Criterion) {
    let mut g = c.benchmark_group("hessians");
    for n in [64, 128] {
        let s = pair_fixture(n);
        g.bench_with_input(BenchmarkId::new("assemble", n), &s, |b, s| b.iter(|| assemble_hessians(black_box(s))));
        let l = assemble_hessians(&s).l_plus;
        g.bench_with_input(BenchmarkId::new("sym_eigs", n), &l, |b, l| {
            b.iter(|| sym_eigs(black_box(l), false).unwrap())
        });
    }
    g.finish();
}

fn newton(c: &mut Criterion) {
    let spec = BranchSpec::new(BaseMode::Lowest, 2, BranchId::II, 64).unwrap();
    let pinned = spec.with_param(0.05).unwrap();
    let guess = branch_predictor(&spec, 0.05).unwrap();
    c.bench_function("newton_refine/branch_ii/64", |b| {
        b.iter(|| newton_refine(black_box(&guess), &pinned).unwrap())
    });
}

criterion_group!(benches, rhs, hessians, newton);
criterion_main!(benches);
