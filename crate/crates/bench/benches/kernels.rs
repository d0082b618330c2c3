use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use curvlab::reduction::full_rhs;
use curvlab::stability::stability_table;
use curvlab::unduloid::{eta_curve, UnduloidParams};
use curvlab::{GridCalculus, RadialProfile, SpeedSpec, WeightModel};

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_derivatives");
    for nodes in [64usize, 256, 1024] {
        let g = GridCalculus::spectral(nodes, 1.0).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|z| 1.0 + 0.1 * (std::f64::consts::PI * z).cos()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &u, |b, u| {
            b.iter(|| g.derivatives(black_box(u)).unwrap())
        });
    }
    group.finish();
}

fn rhs(c: &mut Criterion) {
    let g = GridCalculus::spectral(128, 1.0).unwrap();
    let p = RadialProfile::cylinder_with_modes(3, &g, 0.5, &[(1, 0.05), (2, 0.01)]).unwrap();
    let speed = SpeedSpec::MeanCurvature.build(3, 1.0).unwrap();
    let w = WeightModel::mixed_volume(1);
    c.bench_function("full_rhs_n3_N128", |b| b.iter(|| full_rhs(black_box(&p), speed.as_ref(), &w, &g).unwrap()));
}

fn unduloid(c: &mut Criterion) {
    let p = UnduloidParams::new(5, 1.0, 0.4).unwrap();
    c.bench_function("eta_curve_n5_s04", |b| b.iter(|| eta_curve(black_box(&p), 1).unwrap()));
}

fn table(c: &mut Criterion) {
    c.bench_function("stability_table_30x12", |b| b.iter(|| stability_table(black_box(30), 12).unwrap()));
}

criterion_group!(benches, spectral, rhs, unduloid, table);
criterion_main!(benches);
