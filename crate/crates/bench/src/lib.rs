//! Shared fixtures for the criterion benches.

use riemlap_core::config::{logreg_dataset, preprocess_logreg, regression_dataset, split_regression, Split};
use riemlap_core::rng::{standard_normal_vector, stream};
use riemlap_core::targets::{
    banana_target, generate_banana_data, logreg_target, mlp_target, BananaConfig, BananaTarget, LogisticTarget,
    MlpConfig, MlpTarget,
};
use riemlap_core::{Matrix, Vector};

pub fn banana() -> BananaTarget {
    let cfg = BananaConfig::default();
    banana_target(cfg, generate_banana_data(&cfg, 0)).expect("default banana is valid")
}

pub fn ripley_like() -> LogisticTarget {
    let (raw, _) = logreg_dataset("ripley", true, 0).expect("synthetic ripley");
    logreg_target(&preprocess_logreg(raw, true, true).expect("standardizable"), 100.0).expect("valid target")
}

pub fn snelson_like() -> MlpTarget {
    let (data, _) = regression_dataset("snelson", true, 0).expect("synthetic snelson");
    let (train, _) = split_regression(&data, Split::Complete);
    mlp_target(MlpConfig::default(), &train).expect("valid target")
}

pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> Matrix {
    let mut m = Matrix::zeros(n, d);
    for i in 0..n {
        let z = standard_normal_vector(&mut stream(seed, i as u64), d);
        m.set_row(i, &z.transpose());
    }
    m
}

pub fn probe(d: usize, seed: u64) -> (Vector, Vector) {
    let mut rng = stream(seed, 0);
    let theta = standard_normal_vector(&mut rng, d) * 0.5;
    let v = standard_normal_vector(&mut rng, d);
    (theta, v)
}
