//! Cluster-based outlier factor: seeded k-means partitions the data, clusters
//! are split into large and small by cumulative size, and each sample scores
//! as its distance to the reference large-cluster centroid weighted by that
//! cluster's size. Points in small clusters reference the nearest large
//! centroid, so micro-clusters of anomalies cannot hide behind their own
//! centroid.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

use super::{all_rows_identical, squared_distance, DetectorSpec};

const DEFAULT_K: usize = 8;
const MAX_ITERS: usize = 100;
/// Large clusters are the smallest size-descending prefix covering this share
/// of the data.
const LARGE_CLUSTER_SHARE: f64 = 0.9;

#[derive(Debug, Clone)]
pub(crate) struct CblofModel {
    centroids: Array2<f64>,
    sizes: Vec<usize>,
    large: Vec<bool>,
}

fn kmeans_plus_plus_init(x: &Array2<f64>, k: usize, seed: u64) -> Array2<f64> {
    let n = x.nrows();
    let mut rng = rng_from(seed);
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut min_sq = vec![f64::INFINITY; n];
    for c in 1..k {
        for (i, slot) in min_sq.iter_mut().enumerate() {
            let d = squared_distance(x.row(i), centroids.row(c - 1));
            if d < *slot {
                *slot = d;
            }
        }
        let total: f64 = min_sq.iter().sum();
        let chosen = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in min_sq.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        };
        centroids.row_mut(c).assign(&x.row(chosen));
    }
    centroids
}

fn nearest_centroid(centroids: &Array2<f64>, row: ndarray::ArrayView1<f64>) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(centroid, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    (best.0, best.1.sqrt())
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<CblofModel> {
    let k = spec.int_param("k", DEFAULT_K);
    let n = x.nrows();
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "CBLOF: need at least k={k} samples, got {n}"
        )));
    }
    if all_rows_identical(x) {
        return Err(Error::DegenerateData(
            "CBLOF: all training rows identical".into(),
        ));
    }

    let mut centroids = kmeans_plus_plus_init(x, k, derive_seed(spec.seed, "cblof/init"));
    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let (c, _) = nearest_centroid(&centroids, x.row(i));
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        let mut sums = Array2::<f64>::zeros((k, x.ncols()));
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += &x.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                // adopt the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(x.row(a), centroids.row(assignment[a]));
                        let db = squared_distance(x.row(b), centroids.row(assignment[b]));
                        da.total_cmp(&db)
                    })
                    .expect("non-empty");
                centroids.row_mut(c).assign(&x.row(far));
                changed = true;
            } else {
                let mean: Array1<f64> = sums.row(c).mapv(|v| v / count as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
        if !changed {
            break;
        }
    }

    let mut sizes = vec![0usize; k];
    for i in 0..n {
        let (c, _) = nearest_centroid(&centroids, x.row(i));
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut large = vec![false; k];
    let mut covered = 0usize;
    let target = (LARGE_CLUSTER_SHARE * n as f64).ceil() as usize;
    for &c in &order {
        large[c] = true;
        covered += sizes[c];
        if covered >= target {
            break;
        }
    }
    Ok(CblofModel {
        centroids,
        sizes,
        large,
    })
}

pub(crate) fn score(model: &CblofModel, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| {
            let (own, own_dist) = nearest_centroid(&model.centroids, row);
            let (reference, dist) = if model.large[own] {
                (own, own_dist)
            } else {
                // nearest large centroid
                let mut best = (own, f64::INFINITY);
                for (c, centroid) in model.centroids.rows().into_iter().enumerate() {
                    if !model.large[c] {
                        continue;
                    }
                    let d = squared_distance(centroid, row);
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                (best.0, best.1.sqrt())
            };
            model.sizes[reference] as f64 * dist
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::zoo::Algorithm;

    #[test]
    fn identical_rows_are_degenerate() {
        let x = Array2::from_elem((20, 3), 2.0);
        assert!(matches!(
            fit(&DetectorSpec::new(Algorithm::Cblof).with("k", 4.0), &x),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn needs_at_least_k_samples() {
        let x = synth::standard_normal(5, 2, 1);
        assert!(fit(&DetectorSpec::new(Algorithm::Cblof), &x).is_err());
    }

    #[test]
    fn micro_cluster_scores_above_bulk() {
        // a tight clump far from a big Gaussian cluster
        let mut x = synth::standard_normal(200, 2, 7);
        for i in 0..5 {
            x[[i, 0]] = 30.0 + 0.01 * i as f64;
            x[[i, 1]] = 30.0;
        }
        let spec = DetectorSpec::new(Algorithm::Cblof).with("k", 4.0).with_seed(3);
        let model = fit(&spec, &x).unwrap();
        let scores = score(&model, &x);
        let clump_min = scores[..5].iter().cloned().fold(f64::INFINITY, f64::min);
        let bulk: Vec<f64> = scores[5..].to_vec();
        let bulk_q90 = {
            let mut b = bulk.clone();
            b.sort_by(f64::total_cmp);
            b[(b.len() * 9) / 10]
        };
        assert!(clump_min > bulk_q90, "{clump_min} vs {bulk_q90}");
    }

    #[test]
    fn fit_is_seed_deterministic() {
        let x = synth::standard_normal(150, 4, 9);
        let spec = DetectorSpec::new(Algorithm::Cblof).with_seed(11);
        let a = score(&fit(&spec, &x).unwrap(), &x);
        let b = score(&fit(&spec, &x).unwrap(), &x);
        assert_eq!(a, b);
    }
}
