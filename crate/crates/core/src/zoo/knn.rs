//! k-nearest-neighbor distance score: the distance to the k-th nearest
//! training point (brute force). Zero-distance matches count as neighbors, so
//! scoring a training row against its own training set includes the self
//! match.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::{squared_distance, DetectorSpec};

const DEFAULT_K: usize = 5;

#[derive(Debug, Clone)]
pub(crate) struct KnnModel {
    train: Array2<f64>,
    k: usize,
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<KnnModel> {
    let k = spec.int_param("k", DEFAULT_K);
    if x.nrows() <= k {
        return Err(Error::InvalidArgument(format!(
            "KNN: n must exceed k ({} samples, k={k})",
            x.nrows()
        )));
    }
    Ok(KnnModel {
        train: x.clone(),
        k,
    })
}

pub(crate) fn score(model: &KnnModel, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| kth_distance(&model.train, row, model.k))
        .collect()
}

/// Distance to the k-th closest training row (1-based k).
pub(crate) fn kth_distance(train: &Array2<f64>, row: ndarray::ArrayView1<f64>, k: usize) -> f64 {
    let mut dists: Vec<f64> = train
        .rows()
        .into_iter()
        .map(|t| squared_distance(t, row))
        .collect();
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    kth.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::Algorithm;
    use ndarray::array;

    #[test]
    fn needs_more_samples_than_k() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let err = fit(&DetectorSpec::new(Algorithm::Knn), &x).unwrap_err();
        assert!(err.to_string().contains("must exceed k"));
    }

    #[test]
    fn duplicated_point_scores_zero() {
        // a point duplicated k+1 times has zero distance to its k-th neighbor
        let k = 3usize;
        let mut rows = vec![[5.0, 5.0]; k + 1];
        rows.extend([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]);
        let x = Array2::from_shape_vec((rows.len(), 2), rows.concat().to_vec()).unwrap();
        let spec = DetectorSpec::new(Algorithm::Knn).with("k", k as f64);
        let model = fit(&spec, &x).unwrap();
        let scores = score(&model, &x);
        for s in &scores[..k + 1] {
            assert_eq!(*s, 0.0);
        }
        assert!(scores[k + 1] > 0.0);
    }

    #[test]
    fn far_point_scores_highest() {
        let mut rows: Vec<f64> = Vec::new();
        for i in 0..20 {
            rows.extend([i as f64 * 0.01, -(i as f64) * 0.01]);
        }
        rows.extend([50.0, 50.0]);
        let x = Array2::from_shape_vec((21, 2), rows).unwrap();
        let model = fit(&DetectorSpec::new(Algorithm::Knn), &x).unwrap();
        let scores = score(&model, &x);
        assert!(scores[20] > scores[..20].iter().cloned().fold(0.0, f64::max));
    }
}
