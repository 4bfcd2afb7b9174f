//! Seeded stand-ins for the benchmark datasets, used when the real CSV
//! files are not available.
//!
//! The generators match the published sizes and rough covariate scales of
//! each dataset so that the raw/standardized contrast is preserved; they are
//! not the real data and numbers produced from them are not comparable to
//! published tables.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{sigmoid, Dataset};
use crate::linalg::{Matrix, Vector};
use crate::rng::{salt, salted, stream};

/// Two-class mixture in the unit square, N = 250, two covariates.
pub fn ripley_like(seed: u64) -> Dataset {
    let mut rng = stream(salted(seed, salt::DATA), 1);
    let centers = [
        [(-0.7, 0.3), (0.3, 0.3)],
        [(-0.3, 0.7), (0.4, 0.7)],
    ];
    let n = 250;
    let sd = 0.03f64.sqrt();
    let mut x = Matrix::zeros(n, 2);
    let mut y = Vector::zeros(n);
    for i in 0..n {
        let class = i % 2;
        let comp = rng.gen_range(0..2);
        let (mx, my) = centers[class][comp];
        let e1: f64 = StandardNormal.sample(&mut rng);
        let e2: f64 = StandardNormal.sample(&mut rng);
        x[(i, 0)] = mx + sd * e1;
        x[(i, 1)] = my + sd * e2;
        y[i] = class as f64;
    }
    Dataset::new(x, y).expect("generated data is finite")
}

/// Covariate columns described by (mean, std, weight on the standardized scale).
fn logistic_like(n: usize, cols: &[(f64, f64, f64)], bias: f64, seed: u64, id: u64) -> Dataset {
    let mut rng = stream(salted(seed, salt::DATA), id);
    let d = cols.len();
    let mut x = Matrix::zeros(n, d);
    let mut y = Vector::zeros(n);
    for i in 0..n {
        let mut eta = bias;
        for (j, &(mean, std, w)) in cols.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = mean + std * z;
            eta += w * z;
        }
        let u: f64 = rng.gen();
        y[i] = if u < sigmoid(eta) { 1.0 } else { 0.0 };
    }
    Dataset::new(x, y).expect("generated data is finite")
}

/// Pima-like: N = 532, seven covariates on their natural scales.
pub fn pima_like(seed: u64) -> Dataset {
    let cols = [
        (3.5, 3.4, 0.35),
        (121.0, 31.0, 1.1),
        (71.0, 12.0, -0.05),
        (29.0, 10.0, 0.1),
        (32.9, 6.6, 0.6),
        (0.5, 0.34, 0.35),
        (31.0, 10.8, 0.25),
    ];
    logistic_like(532, &cols, -0.9, seed, 2)
}

/// Covariates with scales spread over two orders of magnitude.
fn mixed_scale(n: usize, d: usize, seed: u64, id: u64) -> Dataset {
    let mut rng = stream(salted(seed, salt::DATA), 100 + id);
    let w = Normal::new(0.0, 1.2 / (d as f64).sqrt()).expect("valid normal");
    let cols: Vec<(f64, f64, f64)> = (0..d)
        .map(|_| {
            let std = 10f64.powf(rng.gen_range(-0.5..2.0));
            let mean = std * rng.gen_range(0.0..3.0);
            (mean, std, w.sample(&mut rng))
        })
        .collect();
    logistic_like(n, &cols, 0.0, seed, 200 + id)
}

/// Heart-like: N = 270, 13 covariates.
pub fn heart_like(seed: u64) -> Dataset {
    mixed_scale(270, 13, seed, 3)
}

/// Australian-like: N = 690, 14 covariates.
pub fn australian_like(seed: u64) -> Dataset {
    mixed_scale(690, 14, seed, 4)
}

/// German-like: N = 1000, 24 covariates.
pub fn german_like(seed: u64) -> Dataset {
    mixed_scale(1000, 24, seed, 5)
}

/// Snelson-like 1D regression: 200 points with x in [0, 6].
pub fn snelson_like(seed: u64) -> Dataset {
    let mut rng = stream(salted(seed, salt::DATA), 6);
    let n = 200;
    let mut x = Matrix::zeros(n, 1);
    let mut y = Vector::zeros(n);
    for i in 0..n {
        let xi: f64 = rng.gen_range(0.0..6.0);
        let e: f64 = StandardNormal.sample(&mut rng);
        x[(i, 0)] = xi;
        y[i] = (1.7 * xi).sin() * 0.9 + 0.25 * (xi - 3.0) + 0.27 * e;
    }
    Dataset::new(x, y).expect("generated data is finite")
}

/// Random held-out subset of `n_test` rows; returns (train, test).
pub fn split_complete(data: &Dataset, n_test: usize, seed: u64) -> (Dataset, Dataset) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    let mut rng = stream(salted(seed, salt::SUBSAMPLE), 0);
    // Fisher–Yates on the first n_test positions
    let n_test = n_test.min(idx.len());
    for i in 0..n_test {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (data.select_rows(&train), data.select_rows(&test))
}

/// Training rows outside [lo, hi] on the first covariate; test rows inside.
pub fn split_gap(data: &Dataset, lo: f64, hi: f64) -> (Dataset, Dataset) {
    let (inside, outside): (Vec<usize>, Vec<usize>) =
        (0..data.len()).partition(|&i| (lo..=hi).contains(&data.x[(i, 0)]));
    (data.select_rows(&outside), data.select_rows(&inside))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_sizes() {
        assert_eq!((ripley_like(0).len(), ripley_like(0).n_features()), (250, 2));
        assert_eq!((pima_like(0).len(), pima_like(0).n_features()), (532, 7));
        assert_eq!((heart_like(0).len(), heart_like(0).n_features()), (270, 13));
        assert_eq!((australian_like(0).len(), australian_like(0).n_features()), (690, 14));
        assert_eq!((german_like(0).len(), german_like(0).n_features()), (1000, 24));
        assert_eq!(snelson_like(0).len(), 200);
    }

    #[test]
    fn labels_are_binary_and_both_present() {
        for ds in [ripley_like(3), pima_like(3), heart_like(3), german_like(3)] {
            ds.validate_binary().unwrap();
            let ones = ds.y.sum();
            assert!(ones > 0.0 && ones < ds.len() as f64);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(pima_like(9), pima_like(9));
        assert_ne!(pima_like(9).x, pima_like(10).x);
    }

    #[test]
    fn splits_partition_rows() {
        let ds = snelson_like(0);
        let (train, test) = split_complete(&ds, 50, 1);
        assert_eq!((train.len(), test.len()), (150, 50));
        let (train, test) = split_gap(&ds, 1.5, 3.0);
        assert_eq!(train.len() + test.len(), 200);
        assert!(train.x.column(0).iter().all(|&x| !(1.5..=3.0).contains(&x)));
    }
}
