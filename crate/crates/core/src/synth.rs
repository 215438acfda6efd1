//! Seeded synthetic dataset generators used by the test suites and the
//! benchmark harness.

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::TabularDataset;
use crate::seed::{derive_seed, rng_from};

/// `n x d` matrix of i.i.d. standard normal draws.
pub fn standard_normal(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from(seed);
    Array2::from_shape_fn((n, d), |_| rng.sample(StandardNormal))
}

/// Equicorrelated Gaussian: every pair of features has correlation `rho`,
/// every feature has unit variance.
pub fn equicorrelated(n: usize, d: usize, rho: f64, seed: u64) -> Array2<f64> {
    assert!((0.0..1.0).contains(&rho), "rho must be in [0, 1)");
    let mut rng = rng_from(seed);
    let shared = rho.sqrt();
    let own = (1.0 - rho).sqrt();
    let mut x = Array2::zeros((n, d));
    for mut row in x.rows_mut() {
        let g: f64 = rng.sample(StandardNormal);
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = shared * g + own * z;
        }
    }
    x
}

/// Gaussian factor model: rows are `z A + noise * e` with `z` standard normal
/// of length `rank` and `A` a fixed seeded mixing matrix scaled so features
/// have roughly unit variance. Data concentrates near a rank-`rank` subspace.
pub fn gaussian_factor(n: usize, d: usize, rank: usize, noise: f64, seed: u64) -> Array2<f64> {
    assert!(rank >= 1 && rank <= d);
    let mixing = mixing_matrix(d, rank, derive_seed(seed, "mixing"));
    let mut rng = rng_from(derive_seed(seed, "samples"));
    let mut x = Array2::zeros((n, d));
    for mut row in x.rows_mut() {
        let z: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
        for (j, v) in row.iter_mut().enumerate() {
            let signal: f64 = (0..rank).map(|r| z[r] * mixing[[r, j]]).sum();
            let e: f64 = rng.sample(StandardNormal);
            *v = signal + noise * e;
        }
    }
    x
}

fn mixing_matrix(d: usize, rank: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from(seed);
    let scale = 1.0 / (rank as f64).sqrt();
    Array2::from_shape_fn((rank, d), |_| {
        let g: f64 = rng.sample(StandardNormal);
        g * scale
    })
}

/// Labeled outlier-detection dataset: `n_inliers` factor-Gaussian rows plus
/// `n_outliers` rows displaced by `offset` along a random coordinate axis
/// (one axis per outlier). Rows are shuffled; labels stay aligned.
#[allow(clippy::too_many_arguments)]
pub fn planted_outliers(
    name: &str,
    n_inliers: usize,
    n_outliers: usize,
    d: usize,
    rank: usize,
    noise: f64,
    offset: f64,
    seed: u64,
) -> TabularDataset {
    let n = n_inliers + n_outliers;
    let base = gaussian_factor(n, d, rank, noise, derive_seed(seed, "base"));
    let mut rng = rng_from(derive_seed(seed, "axes"));
    let mut x = base;
    let mut labels = vec![0u8; n];
    for i in 0..n_outliers {
        let row = n_inliers + i;
        let axis = rng.gen_range(0..d);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        x[[row, axis]] += sign * offset;
        labels[row] = 1;
    }
    // seeded row shuffle keeps outliers at unpredictable positions
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    let mut shuffle_rng = rng_from(derive_seed(seed, "shuffle"));
    order.shuffle(&mut shuffle_rng);
    let shuffled = x.select(Axis(0), &order);
    let shuffled_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
    TabularDataset::new(name, shuffled, Some(shuffled_labels), None)
        .expect("generated data is finite")
}

/// A structurally related dataset pair built from shared latent factors:
/// both sides observe the same `latent`-dimensional signal through their own
/// mixing matrices and noise levels. Used to exercise cross-dataset
/// transformation.
#[allow(clippy::too_many_arguments)]
pub fn correlated_pair(
    n: usize,
    d_a: usize,
    d_b: usize,
    latent: usize,
    noise_a: f64,
    noise_b: f64,
    seed: u64,
) -> (TabularDataset, TabularDataset) {
    let mix_a = mixing_matrix(d_a, latent, derive_seed(seed, "mix/a"));
    let mix_b = mixing_matrix(d_b, latent, derive_seed(seed, "mix/b"));
    let mut rng = rng_from(derive_seed(seed, "samples"));
    let mut xa = Array2::zeros((n, d_a));
    let mut xb = Array2::zeros((n, d_b));
    for i in 0..n {
        let z: Vec<f64> = (0..latent).map(|_| rng.sample(StandardNormal)).collect();
        for j in 0..d_a {
            let signal: f64 = (0..latent).map(|r| z[r] * mix_a[[r, j]]).sum();
            let e: f64 = rng.sample(StandardNormal);
            xa[[i, j]] = signal + noise_a * e;
        }
        for j in 0..d_b {
            let signal: f64 = (0..latent).map(|r| z[r] * mix_b[[r, j]]).sum();
            let e: f64 = rng.sample(StandardNormal);
            xb[[i, j]] = signal + noise_b * e;
        }
    }
    (
        TabularDataset::new("pair_a", xa, None, None).expect("finite"),
        TabularDataset::new("pair_b", xb, None, None).expect("finite"),
    )
}
