use approx::assert_relative_eq;
use riemlap_core::laplace::{
    build_precision, draw_velocity, find_map_euclidean, find_map_hausdorff, fit, sample, ApproxConfig, FisherKind,
    LaplaceFit, MapKind, PrecisionKind, SampleStatus, Variant,
};
use riemlap_core::geometry::{ConstantMetric, FisherMetric};
use riemlap_core::targets::synthetic::ripley_like;
use riemlap_core::targets::{
    banana_target, funnel_target, gaussian_target, generate_banana_data, logreg_target, squiggle_target,
    BananaConfig, BananaTarget, GaussianTarget,
};
use riemlap_core::{Matrix, Target, Vector};

fn vec2(a: f64, b: f64) -> Vector {
    Vector::from_vec(vec![a, b])
}

fn correlated_gaussian() -> GaussianTarget {
    gaussian_target(vec2(1.0, -1.0), Matrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0])).unwrap()
}

fn banana() -> BananaTarget {
    let cfg = BananaConfig::default();
    banana_target(cfg, generate_banana_data(&cfg, 0)).unwrap()
}

fn cfg(variant: Variant, n: usize) -> ApproxConfig {
    ApproxConfig {
        variant,
        n_samples: n,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn rla_f_on_gaussian_equals_ela() {
    let target = correlated_gaussian();
    let f = fit(&target, &cfg(Variant::Ela, 200)).unwrap();
    let ela = sample(&f, &target, &cfg(Variant::Ela, 200)).unwrap();
    let rla_f = sample(&f, &target, &cfg(Variant::RlaF, 200)).unwrap();
    assert!((&ela.samples - &rla_f.samples).amax() <= 1e-6);
}

#[test]
fn rla_b_contracts_towards_the_mode() {
    let target = GaussianTarget::isotropic(2);
    let c = cfg(Variant::RlaB, 300);
    let f = fit(&target, &c).unwrap();
    let s = sample(&f, &target, &c).unwrap();
    assert_eq!(s.n_ok(), 300);
    for i in 0..s.len() {
        let v = draw_velocity(&f, c.seed, i);
        let dist = (s.samples.row(i).transpose() - &f.theta_hat).norm();
        assert!(dist <= v.norm() * (1.0 + 1e-9));
    }
}

#[test]
fn rla_blog_is_exact_for_the_matching_gaussian() {
    let target = correlated_gaussian();
    let c = cfg(Variant::RlaBlog, 40);
    let f = fit(&target, &c).unwrap();
    let s = sample(&f, &target, &c).unwrap();
    for i in 0..s.len() {
        if s.statuses[i] != SampleStatus::Ok {
            continue;
        }
        let expected = &f.theta_hat + draw_velocity(&f, c.seed, i);
        assert!((s.samples.row(i).transpose() - expected).amax() <= 1e-2);
    }
    assert!(s.n_ok() >= 38);
}

#[test]
fn samples_are_deterministic_across_thread_counts() {
    let target = banana();
    let c = ApproxConfig {
        map_kind: MapKind::Hausdorff,
        precision_kind: PrecisionKind::Fisher,
        ..cfg(Variant::RlaF, 64)
    };
    let f = fit(&target, &c).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample(&f, &target, &c).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn fits_are_deterministic() {
    let target = banana();
    let c = cfg(Variant::Ela, 1);
    assert_eq!(fit(&target, &c).unwrap(), fit(&target, &c).unwrap());
}

#[test]
fn banana_euclidean_map_is_off_axis_with_mirror_stationary_point() {
    let target = banana();
    let m = find_map_euclidean(&target, 20, 0).unwrap();
    assert!(m[1].abs() > 0.1);
    assert!(target.grad(&m).norm() <= 1e-6);
    assert!(target.grad(&vec2(m[0], -m[1])).norm() <= 1e-6);
}

#[test]
fn banana_hausdorff_map_is_on_axis() {
    let target = banana();
    let metric = FisherMetric::new(&target).unwrap();
    let m = find_map_hausdorff(&target, &metric, 20, 0).unwrap();
    assert!(m[1].abs() <= 1e-3);
    let p = build_precision(&target, &m, PrecisionKind::Fisher, FisherKind::Expected).unwrap();
    assert_relative_eq!(p, Matrix::from_diagonal(&vec2(25.25, 0.25)), epsilon = 1e-9);
}

#[test]
fn banana_negative_hessian_is_indefinite_at_hausdorff_map() {
    let target = banana();
    let metric = FisherMetric::new(&target).unwrap();
    let m = find_map_hausdorff(&target, &metric, 20, 0).unwrap();
    assert!(build_precision(&target, &m, PrecisionKind::NegHessian, FisherKind::Expected).is_err());
}

#[test]
fn squiggle_and_funnel_hausdorff_maps_are_at_the_origin() {
    let squiggle = squiggle_target(1.5, Matrix::from_diagonal(&vec2(5.0, 0.05))).unwrap();
    let funnel = funnel_target(3.0).unwrap();
    for t in [&squiggle as &dyn Target, &funnel] {
        let metric = FisherMetric::new(t).unwrap();
        let m = find_map_hausdorff(t, &metric, 20, 0).unwrap();
        assert!(m.amax() <= 1e-4, "{}: {m}", t.name());
    }
}

#[test]
fn constant_metric_hausdorff_map_is_euclidean_map() {
    let target = correlated_gaussian();
    let metric = ConstantMetric::new(Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap();
    let h = find_map_hausdorff(&target, &metric, 5, 0).unwrap();
    let e = find_map_euclidean(&target, 5, 0).unwrap();
    assert!((h - e).amax() <= 1e-6);
}

#[test]
fn logistic_precisions_coincide() {
    let data = ripley_like(0).standardize().unwrap().with_intercept();
    let target = logreg_target(&data, 100.0).unwrap();
    let m = find_map_euclidean(&target, 5, 0).unwrap();
    assert!(target.grad(&m).norm() <= 1e-6);
    let h = build_precision(&target, &m, PrecisionKind::NegHessian, FisherKind::Expected).unwrap();
    let g = build_precision(&target, &m, PrecisionKind::Fisher, FisherKind::Expected).unwrap();
    assert!((h - &g).amax() <= 1e-8 * g.amax());
}

#[test]
fn exact_fit_samples_have_the_fitted_covariance() {
    let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
    let f = LaplaceFit::new(vec2(0.0, 0.0), cov.clone().try_inverse().unwrap()).unwrap();
    let n = 20_000;
    let mut acc = Matrix::zeros(2, 2);
    for i in 0..n {
        let v = draw_velocity(&f, 1, i);
        acc += &v * v.transpose();
    }
    acc /= n as f64;
    // each entry has standard error below 0.03 at this n
    assert!((acc - cov).amax() <= 0.1);
}
