//! Unsupervised outlier-detector zoo behind one fit/score/threshold surface.
//!
//! Scores are uniformly oriented: higher means more outlying, for every
//! algorithm. Binary votes come from contamination-rank thresholding — the
//! top `ceil(c * n)` scores are flagged, with ties at the cut broken by
//! ascending sample index. All randomized detectors are seeded through their
//! spec.

mod ae_od;
mod cblof;
mod hbos;
mod iforest;
mod knn;
mod lof;
mod pca_od;

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The implemented detector algorithms. The interface accepts additional
/// algorithms without change; these seven cover the zoo shipped here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "HBOS")]
    Hbos,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "LOF")]
    Lof,
    #[serde(rename = "IFOREST")]
    IForest,
    #[serde(rename = "PCA_OD")]
    PcaOd,
    #[serde(rename = "AE_OD")]
    AeOd,
    #[serde(rename = "CBLOF")]
    Cblof,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Hbos,
        Algorithm::Knn,
        Algorithm::Lof,
        Algorithm::IForest,
        Algorithm::PcaOd,
        Algorithm::AeOd,
        Algorithm::Cblof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hbos => "HBOS",
            Algorithm::Knn => "KNN",
            Algorithm::Lof => "LOF",
            Algorithm::IForest => "IFOREST",
            Algorithm::PcaOd => "PCA_OD",
            Algorithm::AeOd => "AE_OD",
            Algorithm::Cblof => "CBLOF",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

/// An algorithm plus its hyperparameters and seed. Hyperparameter values are
/// positive integers stored as reals for schema uniformity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl DetectorSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        DetectorSpec {
            algorithm,
            hyperparams: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Reject unknown keys and out-of-range values for the algorithm.
    pub fn validate(&self) -> Result<()> {
        let allowed: &[(&str, f64)] = match self.algorithm {
            Algorithm::Hbos => &[("bins", 1.0)],
            Algorithm::Knn | Algorithm::Lof => &[("k", 1.0)],
            Algorithm::IForest => &[("trees", 1.0), ("subsample", 2.0)],
            Algorithm::PcaOd => &[("components", 1.0)],
            Algorithm::AeOd => &[("epochs", 1.0)],
            Algorithm::Cblof => &[("k", 2.0)],
        };
        for (key, value) in &self.hyperparams {
            let Some((_, min)) = allowed.iter().find(|(k, _)| k == key) else {
                return Err(Error::InvalidArgument(format!(
                    "{} does not accept hyperparameter {key:?}",
                    self.algorithm
                )));
            };
            if !value.is_finite() || value.fract() != 0.0 || *value < *min {
                return Err(Error::InvalidArgument(format!(
                    "{}: {key} must be an integer >= {min}, got {value}",
                    self.algorithm
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn int_param(&self, key: &str, default: usize) -> usize {
        self.hyperparams
            .get(key)
            .map(|v| *v as usize)
            .unwrap_or(default)
    }
}

/// Anomaly scores for a batch, oriented higher = more outlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum FittedState {
    Hbos(hbos::HbosModel),
    Knn(knn::KnnModel),
    Lof(lof::LofModel),
    IForest(iforest::IsolationForest),
    PcaOd(pca_od::PcaOdModel),
    AeOd(ae_od::AeOdModel),
    Cblof(cblof::CblofModel),
}

/// A fitted detector; immutable, safe to score from many threads.
#[derive(Debug, Clone)]
pub struct FittedDetector {
    pub spec: DetectorSpec,
    pub train_dims: usize,
    state: FittedState,
}

/// Fit a detector on (normalized) training data.
pub fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<FittedDetector> {
    spec.validate()?;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument("empty training matrix".into()));
    }
    let state = match spec.algorithm {
        Algorithm::Hbos => FittedState::Hbos(hbos::fit(spec, x)?),
        Algorithm::Knn => FittedState::Knn(knn::fit(spec, x)?),
        Algorithm::Lof => FittedState::Lof(lof::fit(spec, x)?),
        Algorithm::IForest => FittedState::IForest(iforest::fit(spec, x)?),
        Algorithm::PcaOd => FittedState::PcaOd(pca_od::fit(spec, x)?),
        Algorithm::AeOd => FittedState::AeOd(ae_od::fit(spec, x)?),
        Algorithm::Cblof => FittedState::Cblof(cblof::fit(spec, x)?),
    };
    Ok(FittedDetector {
        spec: spec.clone(),
        train_dims: x.ncols(),
        state,
    })
}

/// Score a batch with a fitted detector. Scores are finite and higher for
/// more outlying rows.
pub fn score(det: &FittedDetector, x: &Array2<f64>) -> Result<ScoreVector> {
    if x.ncols() != det.train_dims {
        return Err(Error::DimensionMismatch {
            expected: det.train_dims,
            actual: x.ncols(),
        });
    }
    let scores = match &det.state {
        FittedState::Hbos(m) => hbos::score(m, x),
        FittedState::Knn(m) => knn::score(m, x),
        FittedState::Lof(m) => lof::score(m, x),
        FittedState::IForest(m) => iforest::score(m, x),
        FittedState::PcaOd(m) => pca_od::score(m, x),
        FittedState::AeOd(m) => ae_od::score(m, x),
        FittedState::Cblof(m) => cblof::score(m, x),
    };
    if let Some(bad) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::DegenerateData(format!(
            "{} produced a non-finite score for row {bad}",
            det.spec.algorithm
        )));
    }
    Ok(ScoreVector(scores))
}

/// Flag exactly `ceil(contamination * n)` highest-scoring samples as
/// outliers; ties at the cut break by ascending sample index.
pub fn threshold_labels(scores: &ScoreVector, contamination: f64) -> Result<Vec<u8>> {
    if !(contamination > 0.0 && contamination < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contamination must be in (0, 1), got {contamination}"
        )));
    }
    let n = scores.len();
    let flag = (contamination * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        scores.0[j]
            .partial_cmp(&scores.0[i])
            .expect("finite scores")
            .then(i.cmp(&j))
    });
    let mut labels = vec![0u8; n];
    for &i in order.iter().take(flag) {
        labels[i] = 1;
    }
    Ok(labels)
}

/// The documented hyperparameter grid per algorithm; the first entry of each
/// grid is the algorithm's default configuration.
pub fn default_grid(algorithm: Algorithm) -> Vec<DetectorSpec> {
    let entries: Vec<(&str, Vec<f64>)> = match algorithm {
        Algorithm::Knn => vec![("k", vec![3.0, 5.0, 10.0, 20.0, 50.0])],
        Algorithm::IForest => vec![("trees", vec![50.0, 100.0, 200.0])],
        Algorithm::Lof => vec![("k", vec![10.0, 20.0, 50.0])],
        Algorithm::Hbos => vec![("bins", vec![5.0, 10.0, 20.0, 50.0])],
        Algorithm::PcaOd => vec![("components", vec![2.0, 5.0, 10.0, 20.0])],
        Algorithm::Cblof => vec![("k", vec![4.0, 8.0, 16.0])],
        Algorithm::AeOd => vec![("epochs", vec![50.0, 100.0])],
    };
    let (key, values) = &entries[0];
    values
        .iter()
        .map(|&v| DetectorSpec::new(algorithm).with(key, v))
        .collect()
}

/// Every grid configuration across all algorithms, in algorithm order.
pub fn full_grid() -> Vec<DetectorSpec> {
    Algorithm::ALL.into_iter().flat_map(default_grid).collect()
}

pub(crate) fn all_rows_identical(x: &Array2<f64>) -> bool {
    let first = x.row(0);
    x.rows().into_iter().all(|r| r == first)
}

pub(crate) fn squared_distance(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::Axis;

    #[test]
    fn spec_validation_rejects_unknown_keys_and_bad_values() {
        assert!(DetectorSpec::new(Algorithm::Knn).with("k", 5.0).validate().is_ok());
        assert!(DetectorSpec::new(Algorithm::Knn).with("bins", 5.0).validate().is_err());
        assert!(DetectorSpec::new(Algorithm::Knn).with("k", 2.5).validate().is_err());
        assert!(DetectorSpec::new(Algorithm::Knn).with("k", 0.0).validate().is_err());
        assert!(DetectorSpec::new(Algorithm::Cblof).with("k", 1.0).validate().is_err());
    }

    #[test]
    fn grids_have_documented_defaults() {
        let knn = default_grid(Algorithm::Knn);
        assert_eq!(knn.len(), 5);
        assert_eq!(knn[0].hyperparams["k"], 3.0);
        assert_eq!(default_grid(Algorithm::IForest).len(), 3);
        assert_eq!(default_grid(Algorithm::Lof).len(), 3);
        assert_eq!(default_grid(Algorithm::Hbos).len(), 4);
        assert_eq!(default_grid(Algorithm::PcaOd).len(), 4);
        assert_eq!(default_grid(Algorithm::Cblof).len(), 3);
        assert_eq!(default_grid(Algorithm::AeOd).len(), 2);
        for spec in full_grid() {
            spec.validate().unwrap();
        }
    }

    #[test]
    fn threshold_hand_cases() {
        let scores = ScoreVector(vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(threshold_labels(&scores, 0.2).unwrap(), vec![1, 0, 0, 0, 0]);

        let scores = ScoreVector(vec![1.0, 2.0, 3.0, 4.0]);
        let labels = threshold_labels(&scores, 0.5).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 2);
        assert_eq!(labels, vec![0, 0, 1, 1]);

        // all-equal scores: ties at the cut go to the lowest indices
        let scores = ScoreVector(vec![7.0; 8]);
        assert_eq!(
            threshold_labels(&scores, 0.25).unwrap(),
            vec![1, 1, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn threshold_flag_count_law() {
        for n in [1usize, 2, 7, 30] {
            for c in [0.01, 0.1, 0.25, 0.5, 0.9] {
                let scores = ScoreVector((0..n).map(|i| i as f64).collect());
                let labels = threshold_labels(&scores, c).unwrap();
                let expected = (c * n as f64).ceil() as usize;
                assert_eq!(labels.iter().filter(|&&l| l == 1).count(), expected);
            }
        }
        assert!(threshold_labels(&ScoreVector(vec![1.0]), 0.0).is_err());
        assert!(threshold_labels(&ScoreVector(vec![1.0]), 1.0).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for algo in Algorithm::ALL {
            let parsed: Algorithm = algo.name().parse().unwrap();
            assert_eq!(parsed, algo);
            let json = serde_json::to_string(&algo).unwrap();
            assert_eq!(json, format!("\"{}\"", algo.name()));
        }
    }

    #[test]
    fn planted_outliers_score_higher_for_every_algorithm() {
        let ds = synth::planted_outliers("suite", 400, 8, 12, 4, 0.3, 10.0, 77);
        let (_, z) = crate::dataset::normalize(&ds).unwrap();
        let labels = z.labels.clone().unwrap();
        for algo in Algorithm::ALL {
            let mut spec = DetectorSpec::new(algo).with_seed(5);
            if algo == Algorithm::PcaOd {
                spec = spec.with("components", 4.0);
            }
            if algo == Algorithm::AeOd {
                spec = spec.with("epochs", 30.0);
            }
            let det = fit(&spec, &z.x).unwrap();
            let scores = score(&det, &z.x).unwrap();
            let mean = |want: u8| {
                let vals: Vec<f64> = scores
                    .0
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == want)
                    .map(|(s, _)| *s)
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            assert!(
                mean(1) > mean(0),
                "{algo}: outlier mean {} vs inlier mean {}",
                mean(1),
                mean(0)
            );
        }
    }

    #[test]
    fn extreme_point_gets_max_score_for_every_algorithm() {
        // one point displaced 50 sigma from the bulk, spread over all features
        let mut x = synth::gaussian_factor(300, 10, 3, 0.3, 13);
        let extreme = x.nrows() - 1;
        let per_coord = 50.0 / (x.ncols() as f64).sqrt();
        for j in 0..x.ncols() {
            x[[extreme, j]] += per_coord;
        }
        for algo in Algorithm::ALL {
            let mut spec = DetectorSpec::new(algo).with_seed(3);
            if algo == Algorithm::PcaOd {
                spec = spec.with("components", 3.0);
            }
            if algo == Algorithm::AeOd {
                spec = spec.with("epochs", 30.0);
            }
            let det = fit(&spec, &x).unwrap();
            let scores = score(&det, &x).unwrap();
            let argmax = scores
                .0
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, extreme, "{algo} missed the extreme point");
        }
    }

    #[test]
    fn scores_are_permutation_equivariant() {
        let ds = synth::planted_outliers("perm", 120, 6, 8, 3, 0.3, 8.0, 31);
        let (_, z) = crate::dataset::normalize(&ds).unwrap();
        let mut perm: Vec<usize> = (0..z.n_samples()).collect();
        perm.reverse();
        perm.swap(5, 60);
        let permuted = z.x.select(Axis(0), &perm);
        for algo in Algorithm::ALL {
            let mut spec = DetectorSpec::new(algo).with_seed(9);
            if algo == Algorithm::AeOd {
                spec = spec.with("epochs", 10.0);
            }
            let det = fit(&spec, &z.x).unwrap();
            let base = score(&det, &z.x).unwrap();
            let shuffled = score(&det, &permuted).unwrap();
            for (out_idx, &src) in perm.iter().enumerate() {
                assert!(
                    (shuffled.0[out_idx] - base.0[src]).abs() < 1e-12,
                    "{algo} row {out_idx}"
                );
            }
        }
    }
}
