use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gmrfkit::{analyze_with_scheme, selected_inverse, CholeskyFactor, Model, OrderingScheme};
use gmrfkit_bench::{lattice, space_time};

fn lattice_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    g.sample_size(10);
    for n in [8usize, 12, 16] {
        let q = lattice(n);
        g.bench_with_input(BenchmarkId::new("analyze", n), &q, |b, q| {
            b.iter(|| analyze_with_scheme(q, OrderingScheme::Amd).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("factorize", n), &q, |b, q| {
            b.iter(|| CholeskyFactor::new(q, OrderingScheme::Amd, 1).unwrap())
        });
        let f = CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("selinv", n), &f, |b, f| b.iter(|| selected_inverse(f, 1)));
    }
    g.finish();
}

fn space_time_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("space_time");
    g.sample_size(10);
    for model in [Model::Separable, Model::Nonseparable] {
        let q = space_time(model, 20, 8);
        let f = CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap();
        g.bench_function(BenchmarkId::new("factorize", model), |b| {
            b.iter(|| CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap())
        });
        g.bench_function(BenchmarkId::new("selinv", model), |b| b.iter(|| selected_inverse(&f, 1)));
    }
    g.finish();
}

criterion_group!(benches, lattice_kernels, space_time_kernels);
criterion_main!(benches);
