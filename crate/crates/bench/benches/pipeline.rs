use criterion::{criterion_group, criterion_main, Criterion};
use kfp_bench::Fixture;
use kfp_core::function_spaces::luxemburg;
use kfp_core::operators::{apply_t, grand_maximal, DiscreteOperator};
use kfp_core::sparse::{build_sparse_family, Mode};
use kfp_core::OperatorShape;

fn operators(c: &mut Criterion) {
    let fx = Fixture::new(OperatorShape::parabolic(), 32, 2);
    let f = &fx.fields[0];
    c.bench_function("operator_build/parabolic32", |b| b.iter(|| DiscreteOperator::build(&fx.spec, &fx.kernel, &fx.bx).unwrap()));
    c.bench_function("apply_t/parabolic32", |b| b.iter(|| apply_t(&fx.spec, &fx.kernel, f).unwrap()));
    c.bench_function("grand_maximal/parabolic32", |b| b.iter(|| grand_maximal(&fx.op, &fx.plan, f, None)));
}

fn sparse(c: &mut Criterion) {
    let fx = Fixture::new(OperatorShape::parabolic(), 32, 2);
    let setup = fx.setup();
    let f = &fx.fields[0];
    c.bench_function("sparse_family/parabolic32", |b| b.iter(|| build_sparse_family(&setup, 0, 0, 0, f, Mode::Plain, None).unwrap()));
}

fn spaces(c: &mut Criterion) {
    let values: Vec<f64> = (0..65536).map(|i| ((i as f64) * 0.37).sin()).collect();
    c.bench_function("luxemburg/power_p3", |b| b.iter(|| luxemburg(|_, s| s.powi(3), &values, 1e-3).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = operators, sparse, spaces
}
criterion_main!(benches);
