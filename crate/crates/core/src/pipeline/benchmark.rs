//! Leave-one-out benchmark harness: every labeled dataset takes a turn as
//! the unlabeled private dataset while the rest form the public index. Index
//! entries (fingerprint curve plus grid-searched best models) are prepared
//! once per dataset and reused across folds.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::eval::report::{emit_report, MetricBlock};
use crate::eval::timed;
use crate::index::{PublicIndex, PublicIndexEntry, RankedModel, INDEX_SCHEMA_VERSION};
use crate::similarity::{normalized_curve, sad};

use super::baselines::{baseline_avg_od, baseline_best_od, baseline_default_od, grid_search_best};
use super::{method1_top1, method2_topn, Method, PipelineConfig, SoftLabelRun};

/// Build an index entry for a labeled dataset: fingerprint curve plus every
/// algorithm's grid-search winner ranked by average precision.
pub fn prepare_entry(
    ds: &TabularDataset,
    data_path: &Path,
    label_column: &str,
    cfg: &PipelineConfig,
) -> Result<PublicIndexEntry> {
    let n_outliers = ds
        .n_outliers()
        .ok_or_else(|| Error::LabelsRequired(format!("{} has no labels", ds.name)))?;
    if n_outliers == 0 || n_outliers == ds.n_samples() {
        return Err(Error::SingleClassTruth);
    }
    let curve = normalized_curve(ds)?;
    let searches = grid_search_best(ds, cfg)?;
    let best_models: Vec<RankedModel> = searches
        .iter()
        .map(|s| RankedModel::from_spec(&s.best_spec, "pr_auc", s.best_pr_auc))
        .collect();
    Ok(PublicIndexEntry {
        dataset_name: ds.name.clone(),
        data_path: data_path.to_path_buf(),
        label_column: Some(label_column.to_string()),
        n_samples: ds.n_samples(),
        n_features: ds.n_features(),
        n_outliers,
        outlier_fraction: n_outliers as f64 / ds.n_samples() as f64,
        curve,
        best_models,
    })
}

/// Build a full in-memory index from labeled datasets on disk.
pub fn prepare_index(
    datasets: &[(TabularDataset, PathBuf)],
    label_column: &str,
    cfg: &PipelineConfig,
) -> Result<PublicIndex> {
    let mut index = PublicIndex {
        entries: Vec::new(),
        version: INDEX_SCHEMA_VERSION,
    };
    for (ds, path) in datasets {
        index = index.register(prepare_entry(ds, path, label_column, cfg)?)?;
    }
    Ok(index)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub method: Method,
    pub metrics: Option<MetricBlock>,
    pub seconds: f64,
    /// SAD of the candidate that produced the labels (transformation methods
    /// only): the x-coordinate for similarity-vs-accuracy plots.
    pub similarity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub datasets: usize,
    pub failures: usize,
    pub mean_balanced_accuracy: f64,
    pub mean_f1: f64,
    pub mean_pr_auc: f64,
    pub mean_roc_auc: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub summary: Vec<MethodSummary>,
    /// Per-method stage seconds summed over folds (single-threaded work).
    pub stage_totals: Vec<(Method, std::collections::BTreeMap<String, f64>)>,
}

fn run_method(
    method: Method,
    private: &TabularDataset,
    fold_index: &PublicIndex,
    cfg: &PipelineConfig,
) -> Result<SoftLabelRun> {
    let unlabeled = TabularDataset {
        labels: None,
        ..private.clone()
    };
    match method {
        Method::Top1Ds => method1_top1(&unlabeled, fold_index, cfg),
        Method::TopNDs => method2_topn(&unlabeled, fold_index, cfg),
        Method::DefaultOd => baseline_default_od(&unlabeled, cfg),
        Method::AvgOd => baseline_avg_od(&unlabeled, cfg),
        Method::BestOd => baseline_best_od(private, cfg).map(|(run, _)| run),
    }
}

/// SAD between the private fingerprint and the entry whose models produced
/// the labels (the last successful trail entry).
fn chosen_similarity(
    private: &TabularDataset,
    index: &PublicIndex,
    run: &SoftLabelRun,
) -> Option<f64> {
    let chosen = run.fallback_trail.iter().rev().find(|a| a.success)?;
    let entry = index.get(&chosen.dataset)?;
    let curve = normalized_curve(private).ok()?;
    Some(sad(&curve, &entry.curve))
}

/// Leave-one-out loop over a prebuilt index. Per-dataset failures are
/// recorded in their row and the loop continues; the summary counts them.
pub fn run_with_index(
    datasets: &[(TabularDataset, PathBuf)],
    index: &PublicIndex,
    methods: &[Method],
    cfg: &PipelineConfig,
) -> Result<BenchmarkReport> {
    if datasets.len() < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least two datasets".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut stage_totals: Vec<(Method, std::collections::BTreeMap<String, f64>)> =
        methods.iter().map(|&m| (m, Default::default())).collect();
    for (private, _) in datasets {
        let fold_index = index.without(&private.name);
        let truth = private
            .labels
            .clone()
            .ok_or_else(|| Error::LabelsRequired(format!("{} has no labels", private.name)))?;
        for &method in methods {
            let (outcome, seconds) = timed(|| run_method(method, private, &fold_index, cfg));
            let row = match outcome {
                Ok(run) => {
                    let totals = &mut stage_totals
                        .iter_mut()
                        .find(|(m, _)| *m == method)
                        .expect("method registered")
                        .1;
                    for (stage, secs) in &run.timings {
                        *totals.entry(stage.clone()).or_insert(0.0) += secs;
                    }
                    let report = emit_report(&run, &private.name, Some(&truth))?;
                    BenchmarkRow {
                        dataset: private.name.clone(),
                        method,
                        metrics: report.metrics,
                        seconds,
                        similarity: chosen_similarity(private, &fold_index, &run),
                        error: None,
                    }
                }
                Err(err) => {
                    log::warn!("{method} failed on {}: {err}", private.name);
                    BenchmarkRow {
                        dataset: private.name.clone(),
                        method,
                        metrics: None,
                        seconds,
                        similarity: None,
                        error: Some(err.to_string()),
                    }
                }
            };
            rows.push(row);
        }
    }
    let summary = summarize(&rows, methods);
    Ok(BenchmarkReport {
        rows,
        summary,
        stage_totals,
    })
}

/// Leave-one-out loop that first grid-searches every dataset's best models.
pub fn run_leave_one_out(
    datasets: &[(TabularDataset, PathBuf)],
    label_column: &str,
    methods: &[Method],
    cfg: &PipelineConfig,
) -> Result<BenchmarkReport> {
    let index = prepare_index(datasets, label_column, cfg)?;
    run_with_index(datasets, &index, methods, cfg)
}

pub fn summarize(rows: &[BenchmarkRow], methods: &[Method]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let mine: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&MetricBlock> = mine.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let count = ok.len().max(1) as f64;
            let mean = |f: fn(&MetricBlock) -> f64| ok.iter().map(|m| f(m)).sum::<f64>() / count;
            MethodSummary {
                method,
                datasets: mine.len(),
                failures: mine.len() - ok.len(),
                mean_balanced_accuracy: mean(|m| m.balanced_accuracy),
                mean_f1: mean(|m| m.f1),
                mean_pr_auc: mean(|m| m.pr_auc),
                mean_roc_auc: mean(|m| m.roc_auc),
                total_seconds: mine.iter().map(|r| r.seconds).sum(),
            }
        })
        .collect()
}

/// "dataset,method,balanced_accuracy,f1,pr_auc,roc_auc,seconds,similarity,error"
pub fn rows_csv(rows: &[BenchmarkRow]) -> String {
    let mut out =
        String::from("dataset,method,balanced_accuracy,f1,pr_auc,roc_auc,seconds,similarity,error\n");
    for r in rows {
        let (ba, f1, pr, roc) = match &r.metrics {
            Some(m) => (
                m.balanced_accuracy.to_string(),
                m.f1.to_string(),
                m.pr_auc.to_string(),
                m.roc_auc.to_string(),
            ),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{ba},{f1},{pr},{roc},{},{},{}\n",
            r.dataset,
            r.method,
            r.seconds,
            r.similarity.map(|s| s.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    out
}

/// "method,datasets,failures,balanced_accuracy,f1,pr_auc,roc_auc,total_seconds"
pub fn summary_csv(summary: &[MethodSummary]) -> String {
    let mut out =
        String::from("method,datasets,failures,balanced_accuracy,f1,pr_auc,roc_auc,total_seconds\n");
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.method,
            s.datasets,
            s.failures,
            s.mean_balanced_accuracy,
            s.mean_f1,
            s.mean_pr_auc,
            s.mean_roc_auc,
            s.total_seconds,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Confusion;

    fn row(dataset: &str, method: Method, bacc: Option<f64>) -> BenchmarkRow {
        BenchmarkRow {
            dataset: dataset.into(),
            method,
            metrics: bacc.map(|b| MetricBlock {
                balanced_accuracy: b,
                f1: b / 2.0,
                pr_auc: b / 3.0,
                roc_auc: b / 4.0,
                confusion: Confusion {
                    tp: 1,
                    fp: 0,
                    tn: 1,
                    fn_: 0,
                },
            }),
            seconds: 1.0,
            similarity: None,
            error: bacc.is_none().then(|| "boom".to_string()),
        }
    }

    #[test]
    fn summary_averages_per_dataset_rows_exactly() {
        let rows = vec![
            row("a", Method::Top1Ds, Some(0.9)),
            row("b", Method::Top1Ds, Some(0.7)),
            row("c", Method::Top1Ds, Some(0.5)),
        ];
        let summary = summarize(&rows, &[Method::Top1Ds]);
        assert!((summary[0].mean_balanced_accuracy - 0.7).abs() < 1e-12);
        assert_eq!(summary[0].failures, 0);
        assert_eq!(summary[0].datasets, 3);
    }

    #[test]
    fn failures_are_counted_and_other_rows_survive() {
        let rows = vec![
            row("a", Method::Top1Ds, Some(0.8)),
            row("b", Method::Top1Ds, None),
        ];
        let summary = summarize(&rows, &[Method::Top1Ds]);
        assert_eq!(summary[0].failures, 1);
        assert!((summary[0].mean_balanced_accuracy - 0.8).abs() < 1e-12);
        let csv = rows_csv(&rows);
        assert!(csv.contains("boom"));
        assert_eq!(csv.lines().count(), 3);
    }
}
