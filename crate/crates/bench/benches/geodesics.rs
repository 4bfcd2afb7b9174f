use criterion::{black_box, criterion_group, criterion_main, Criterion};

use riemlap_bench::{banana, probe, ripley_like, snelson_like};
use riemlap_core::geodesic::{exp_map, IntegratorConfig};
use riemlap_core::geometry::{default_step, numeric_accel, FisherMetric, Metric, MongeMetric};
use riemlap_core::{Target, Vector};

fn exp_maps(c: &mut Criterion) {
    let target = banana();
    let cfg = IntegratorConfig::default();
    let theta0 = Vector::from_vec(vec![0.5, 0.0]);
    let v0 = Vector::from_vec(vec![0.1, 0.6]);
    let monge = MongeMetric::new(&target);
    let fisher = FisherMetric::new(&target).expect("banana has a Fisher metric");
    c.bench_function("exp_map/banana_monge", |b| b.iter(|| exp_map(&monge, black_box(&theta0), &v0, &cfg)));
    c.bench_function("exp_map/banana_fisher", |b| b.iter(|| exp_map(&fisher, black_box(&theta0), &v0, &cfg)));
}

fn accelerations(c: &mut Criterion) {
    let lr = ripley_like();
    let lr_metric = FisherMetric::new(&lr).expect("logistic Fisher metric");
    let (theta, v) = probe(lr.dim(), 1);
    c.bench_function("accel/logistic_analytic", |b| b.iter(|| lr_metric.accel(black_box(&theta), &v)));
    c.bench_function("accel/logistic_numeric", |b| {
        b.iter(|| numeric_accel(&|t| lr_metric.tensor(t), black_box(&theta), &v, default_step()))
    });

    let mlp = snelson_like();
    let mlp_metric = FisherMetric::new(&mlp).expect("MLP Fisher metric");
    let (theta, v) = probe(mlp.dim(), 2);
    c.bench_function("accel/mlp_analytic", |b| b.iter(|| mlp_metric.accel(black_box(&theta), &v)));
    let monge = MongeMetric::new(&mlp);
    c.bench_function("accel/mlp_monge", |b| b.iter(|| monge.accel(black_box(&theta), &v)));
}

criterion_group!(benches, exp_maps, accelerations);
criterion_main!(benches);
