use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kabe::cluster::{bisect, bisect_scalar, PointSpace};
use kabe::corpus::{fit_normalizer, generate_synthetic, Coord, SyntheticModel};
use kabe::eval::{loocv, wilcoxon_approx, wilcoxon_exact, Method};
use kabe::{BkConfig, MethodSpec};

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("bisect");
    for n in [24, 100, 500] {
        let d = generate_synthetic(1, n, 8, SyntheticModel::TwoBlob).unwrap();
        let nm = fit_normalizer(d.projects.iter(), &d.schema, &d.full_mask()).unwrap();
        let v: Vec<Vec<Coord>> = d.projects.iter().map(|p| nm.normalize(p)).collect();
        let space = PointSpace::from_vectors(&v).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let cfg = BkConfig::default();
        group.bench_with_input(BenchmarkId::new("features", n), &n, |b, _| {
            b.iter(|| bisect(black_box(&all), &space, &cfg).unwrap())
        });
        let values: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        group.bench_with_input(BenchmarkId::new("scalar", n), &n, |b, _| {
            b.iter(|| bisect_scalar(black_box(&values), &cfg).unwrap())
        });
    }
    group.finish();
}

fn loocv_albrecht(c: &mut Criterion) {
    let (d, _) = kabe::corpus::bundled("albrecht").unwrap().unwrap();
    let mask = d.full_mask();
    let mut group = c.benchmark_group("loocv/albrecht");
    for spec in [
        MethodSpec::Kabe,
        MethodSpec::AbeK(3),
        MethodSpec::KabeSm,
        MethodSpec::Cart,
    ] {
        let method = Method::new(spec);
        group.bench_function(spec.to_string(), |b| {
            b.iter(|| loocv(&d, &method, &mask, 42).unwrap())
        });
    }
    group.finish();
}

fn rank_sum(c: &mut Criterion) {
    let a: Vec<f64> = (0..6).map(|i| (i * 3 % 7) as f64).collect();
    let b: Vec<f64> = (0..6).map(|i| (i * 5 % 11) as f64 + 0.5).collect();
    c.bench_function("wilcoxon/exact 6+6", |bn| {
        bn.iter(|| wilcoxon_exact(black_box(&a), black_box(&b)).unwrap())
    });
    let a: Vec<f64> = (0..200).map(|i| (i * 13 % 97) as f64).collect();
    let b: Vec<f64> = (0..200).map(|i| (i * 17 % 89) as f64).collect();
    c.bench_function("wilcoxon/approx 200+200", |bn| {
        bn.iter(|| wilcoxon_approx(black_box(&a), black_box(&b)).unwrap())
    });
}

criterion_group!(benches, clustering, loocv_albrecht, rank_sum);
criterion_main!(benches);
