//! Reference strategies that skip similarity and transformation entirely and
//! fit detectors on the private data itself: every algorithm at its default
//! configuration, every grid configuration, or the supervised grid-search
//! optimum (which requires ground truth and serves as an upper bound).

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::Serialize;

use crate::dataset::{normalize, TabularDataset};
use crate::error::{Error, Result};
use crate::eval::{pr_auc, timed};
use crate::parallel::parallel_map;
use crate::seed::derive_seed;
use crate::zoo::{self, Algorithm, DetectorSpec, ScoreVector};

use super::{finish_run, Method, PipelineConfig, VoterProvenance};

fn seeded(spec: DetectorSpec, root: u64, dataset: &str, idx: usize) -> DetectorSpec {
    let seed = derive_seed(
        root,
        &format!("baseline/{dataset}/{}/{idx}", spec.algorithm),
    );
    spec.with_seed(seed)
}

fn fit_and_score(spec: &DetectorSpec, x: &Array2<f64>) -> Result<ScoreVector> {
    let det = zoo::fit(spec, x)?;
    zoo::score(&det, x)
}

fn vote_rows(
    prv_n: &TabularDataset,
    specs: Vec<DetectorSpec>,
    contamination: f64,
    threads: usize,
) -> Result<Vec<(Vec<u8>, VoterProvenance)>> {
    let results = parallel_map(&specs, threads, |spec| -> Result<_> {
        let scores = fit_and_score(spec, &prv_n.x)?;
        let vote = zoo::threshold_labels(&scores, contamination)?;
        Ok((
            vote,
            VoterProvenance {
                dataset: prv_n.name.clone(),
                spec: spec.clone(),
            },
        ))
    });
    results.into_iter().collect()
}

fn baseline_run(
    method: Method,
    private: &TabularDataset,
    specs: impl Fn(&str, u64) -> Vec<DetectorSpec>,
    contamination: Option<f64>,
    cfg: &PipelineConfig,
) -> Result<crate::pipeline::SoftLabelRun> {
    let mut timings = BTreeMap::new();
    let (norm, norm_seconds) = timed(|| normalize(private));
    let (_, prv_n) = norm?;
    timings.insert("normalization".into(), norm_seconds);
    let contamination = contamination.unwrap_or(cfg.default_contamination);
    let specs = specs(&private.name, cfg.seed);
    let (votes, predict_seconds) = timed(|| vote_rows(&prv_n, specs, contamination, cfg.threads));
    timings.insert("prediction".into(), predict_seconds);
    finish_run(method, votes?, Vec::new(), timings, cfg)
}

/// Every algorithm at its grid-default configuration, thresholded at the
/// assumed contamination.
pub fn baseline_default_od(
    private: &TabularDataset,
    cfg: &PipelineConfig,
) -> Result<crate::pipeline::SoftLabelRun> {
    baseline_run(
        Method::DefaultOd,
        private,
        |name, root| {
            Algorithm::ALL
                .into_iter()
                .map(|algo| seeded(zoo::default_grid(algo).remove(0), root, name, 0))
                .collect()
        },
        None,
        cfg,
    )
}

/// Every configuration of every algorithm's grid.
pub fn baseline_avg_od(
    private: &TabularDataset,
    cfg: &PipelineConfig,
) -> Result<crate::pipeline::SoftLabelRun> {
    baseline_run(
        Method::AvgOd,
        private,
        |name, root| {
            Algorithm::ALL
                .into_iter()
                .flat_map(|algo| {
                    zoo::default_grid(algo)
                        .into_iter()
                        .enumerate()
                        .map(move |(idx, spec)| (algo, idx, spec))
                })
                .map(|(_, idx, spec)| seeded(spec, root, name, idx))
                .collect()
        },
        None,
        cfg,
    )
}

/// Outcome of one algorithm's grid search on labeled data.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoSearch {
    pub algorithm: Algorithm,
    pub best_spec: DetectorSpec,
    pub best_pr_auc: f64,
    pub default_pr_auc: f64,
}

/// Grid-search every algorithm on a labeled dataset (fitting on the z-scored
/// data and scoring it back), ranked by average precision against the truth.
/// Returns one row per algorithm, ordered best-first.
pub fn grid_search_best(
    private: &TabularDataset,
    cfg: &PipelineConfig,
) -> Result<Vec<AlgoSearch>> {
    let truth = private
        .labels
        .as_deref()
        .ok_or_else(|| Error::LabelsRequired("grid search scores against ground truth".into()))?;
    let (_, prv_n) = normalize(private)?;
    let mut searches = Vec::new();
    for algo in Algorithm::ALL {
        let grid: Vec<(usize, DetectorSpec)> = zoo::default_grid(algo)
            .into_iter()
            .enumerate()
            .map(|(idx, spec)| (idx, seeded(spec, cfg.seed, &private.name, idx)))
            .collect();
        let evals = parallel_map(&grid, cfg.threads, |(_, spec)| -> Result<f64> {
            let scores = fit_and_score(spec, &prv_n.x)?;
            pr_auc(&scores, truth)
        });
        let mut best: Option<(usize, f64)> = None;
        let mut default_metric = 0.0;
        for ((idx, _), metric) in grid.iter().zip(evals) {
            let metric = metric?;
            if *idx == 0 {
                default_metric = metric;
            }
            // strict comparison keeps the earliest grid entry on ties
            if best.is_none_or(|(_, m)| metric > m) {
                best = Some((*idx, metric));
            }
        }
        let (best_idx, best_metric) = best.expect("grids are non-empty");
        searches.push(AlgoSearch {
            algorithm: algo,
            best_spec: grid[best_idx].1.clone(),
            best_pr_auc: best_metric,
            default_pr_auc: default_metric,
        });
    }
    searches.sort_by(|a, b| {
        b.best_pr_auc
            .partial_cmp(&a.best_pr_auc)
            .expect("finite metric")
            .then(a.algorithm.cmp(&b.algorithm))
    });
    Ok(searches)
}

/// Supervised upper bound: grid-search every algorithm against the ground
/// truth, return the winning algorithm's labels thresholded at the true
/// contamination. Errors without labels.
pub fn baseline_best_od(
    private: &TabularDataset,
    cfg: &PipelineConfig,
) -> Result<(crate::pipeline::SoftLabelRun, Vec<AlgoSearch>)> {
    if private.labels.is_none() {
        return Err(Error::LabelsRequired(
            "the supervised baseline needs ground-truth labels".into(),
        ));
    }
    let mut timings = BTreeMap::new();
    let (searches, search_seconds) = timed(|| grid_search_best(private, cfg));
    let searches = searches?;
    timings.insert("grid_search".into(), search_seconds);

    let winner = &searches[0];
    let contamination = private
        .outlier_fraction()
        .expect("labels checked above")
        .clamp(f64::MIN_POSITIVE, 1.0 - 1e-9);
    let (_, prv_n) = normalize(private)?;
    let (votes, predict_seconds) = timed(|| -> Result<_> {
        let scores = fit_and_score(&winner.best_spec, &prv_n.x)?;
        let vote = zoo::threshold_labels(&scores, contamination)?;
        Ok(vec![(
            vote,
            VoterProvenance {
                dataset: private.name.clone(),
                spec: winner.best_spec.clone(),
            },
        )])
    });
    timings.insert("prediction".into(), predict_seconds);
    let run = finish_run(Method::BestOd, votes?, Vec::new(), timings, cfg)?;
    Ok((run, searches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::majority_vote;
    use crate::synth;

    fn labeled_dataset(seed: u64) -> TabularDataset {
        synth::planted_outliers("base", 150, 15, 8, 3, 0.3, 9.0, seed)
    }

    fn quick_cfg() -> PipelineConfig {
        PipelineConfig {
            seed: 5,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn default_baseline_has_one_voter_per_algorithm() {
        let ds = labeled_dataset(1);
        let run = baseline_default_od(&ds, &quick_cfg()).unwrap();
        assert_eq!(run.votes.len(), Algorithm::ALL.len());
        assert_eq!(run.labels.len(), ds.n_samples());
        assert_eq!(
            run.labels,
            majority_vote(&run.votes, TiePolicy::Inlier).unwrap()
        );
        use crate::pipeline::TiePolicy;
    }

    #[test]
    fn avg_baseline_runs_the_full_grid() {
        let ds = labeled_dataset(2);
        let run = baseline_avg_od(&ds, &quick_cfg()).unwrap();
        let expected: usize = Algorithm::ALL
            .into_iter()
            .map(|a| zoo::default_grid(a).len())
            .sum();
        assert_eq!(run.votes.len(), expected);
    }

    #[test]
    fn best_od_requires_labels() {
        let mut ds = labeled_dataset(3);
        ds.labels = None;
        assert!(matches!(
            baseline_best_od(&ds, &quick_cfg()),
            Err(Error::LabelsRequired(_))
        ));
    }

    #[test]
    fn best_od_beats_or_ties_defaults_per_algorithm() {
        let ds = labeled_dataset(4);
        let searches = grid_search_best(&ds, &quick_cfg()).unwrap();
        assert_eq!(searches.len(), Algorithm::ALL.len());
        for s in &searches {
            assert!(
                s.best_pr_auc >= s.default_pr_auc,
                "{}: best {} < default {}",
                s.algorithm,
                s.best_pr_auc,
                s.default_pr_auc
            );
        }
        // the winner also beats the mean of the defaults
        let mean_default: f64 =
            searches.iter().map(|s| s.default_pr_auc).sum::<f64>() / searches.len() as f64;
        assert!(searches[0].best_pr_auc >= mean_default);
    }

    #[test]
    fn best_od_run_is_single_voter() {
        let ds = labeled_dataset(6);
        let (run, searches) = baseline_best_od(&ds, &quick_cfg()).unwrap();
        assert_eq!(run.votes.len(), 1);
        assert_eq!(run.labels, run.votes[0]);
        assert_eq!(run.provenance[0].spec.algorithm, searches[0].algorithm);
    }
}
