//! Report assembly and plot-data emission.
//!
//! A report evaluates one soft-label run against ground truth (when
//! available): balanced accuracy and F1 from binary labels, PR/ROC-AUC from
//! the per-sample mean vote fraction (votes are the only graded signal a
//! fused run retains). For the baselines that average over detector
//! configurations, the label metrics are the per-voter means rather than the
//! fused-label metrics; the report records which convention produced it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Method, SoftLabelRun};
use crate::zoo::ScoreVector;

use super::{balanced_accuracy, confusion, f1, pr_auc, roc_auc, Confusion};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: Method,
    pub private_dataset: String,
    pub public_datasets: Vec<String>,
    pub config_digest: String,
    /// How PR/ROC scores were derived ("mean_vote_fraction").
    pub score_source: String,
    /// Whether label metrics are "fused" or "per_voter_mean".
    pub label_metric_source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricBlock {
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub pr_auc: f64,
    pub roc_auc: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub run_metadata: RunMetadata,
    /// Present when ground truth was supplied.
    pub metrics: Option<MetricBlock>,
    pub timings: BTreeMap<String, f64>,
}

/// Per-sample mean of the vote matrix — the graded score used for AUCs.
pub fn mean_vote_fraction(run: &SoftLabelRun) -> ScoreVector {
    let voters = run.votes.len().max(1) as f64;
    let n = run.labels.len();
    let mut fractions = vec![0.0f64; n];
    for row in &run.votes {
        for (i, &v) in row.iter().enumerate() {
            fractions[i] += v as f64;
        }
    }
    ScoreVector(fractions.into_iter().map(|s| s / voters).collect())
}

fn averages_over_voters(method: Method) -> bool {
    matches!(method, Method::AvgOd | Method::DefaultOd)
}

/// Compute the report for a run; metrics only when `truth` is given.
pub fn emit_report(
    run: &SoftLabelRun,
    private_name: &str,
    truth: Option<&[u8]>,
) -> Result<EvalReport> {
    let metrics = match truth {
        None => None,
        Some(truth) => {
            let scores = mean_vote_fraction(run);
            let (bacc, f) = if averages_over_voters(run.method) {
                let mut bacc_sum = 0.0;
                let mut f1_sum = 0.0;
                for row in &run.votes {
                    bacc_sum += balanced_accuracy(row, truth)?;
                    f1_sum += f1(row, truth)?;
                }
                let voters = run.votes.len() as f64;
                (bacc_sum / voters, f1_sum / voters)
            } else {
                (
                    balanced_accuracy(&run.labels, truth)?,
                    f1(&run.labels, truth)?,
                )
            };
            Some(MetricBlock {
                balanced_accuracy: bacc,
                f1: f,
                pr_auc: pr_auc(&scores, truth)?,
                roc_auc: roc_auc(&scores, truth)?,
                confusion: confusion(&run.labels, truth)?,
            })
        }
    };
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_metadata: RunMetadata {
            method: run.method,
            private_dataset: private_name.to_string(),
            public_datasets: run
                .provenance
                .iter()
                .map(|p| p.dataset.clone())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
            config_digest: run.config_digest.clone(),
            score_source: "mean_vote_fraction".to_string(),
            label_metric_source: if averages_over_voters(run.method) {
                "per_voter_mean".to_string()
            } else {
                "fused".to_string()
            },
        },
        metrics,
        timings: run.timings.clone(),
    })
}

pub fn save_report(report: &EvalReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

/// "similarity,balanced_accuracy" rows.
pub fn similarity_accuracy_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("similarity,balanced_accuracy\n");
    for (sim, acc) in rows {
        out.push_str(&format!("{sim},{acc}\n"));
    }
    out
}

/// "stage,seconds,method" rows from one or more runs.
pub fn stage_timings_csv(runs: &[(&str, &BTreeMap<String, f64>)]) -> String {
    let mut out = String::from("stage,seconds,method\n");
    for (method, timings) in runs {
        for (stage, seconds) in timings.iter() {
            out.push_str(&format!("{stage},{seconds},{method}\n"));
        }
    }
    out
}
