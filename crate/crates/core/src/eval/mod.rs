//! Detection metrics, wall-clock stage timing, and report emission.

pub mod report;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zoo::ScoreVector;

pub use report::{emit_report, EvalReport, MetricBlock, RunMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<Confusion> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fn_ += 1,
            _ => return Err(Error::InvalidArgument("labels must be 0 or 1".into())),
        }
    }
    Ok(c)
}

fn require_both_classes(truth: &[u8]) -> Result<()> {
    let pos = truth.iter().filter(|&&t| t == 1).count();
    if pos == 0 || pos == truth.len() {
        return Err(Error::SingleClassTruth);
    }
    Ok(())
}

/// Mean of true-positive and true-negative rate; robust to class imbalance.
pub fn balanced_accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    require_both_classes(truth)?;
    let c = confusion(pred, truth)?;
    let tpr = c.tp as f64 / (c.tp + c.fn_) as f64;
    let tnr = c.tn as f64 / (c.tn + c.fp) as f64;
    Ok((tpr + tnr) / 2.0)
}

/// Harmonic mean of precision and recall; 0 when both vanish.
pub fn f1(pred: &[u8], truth: &[u8]) -> Result<f64> {
    let c = confusion(pred, truth)?;
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * c.tp as f64 / denom as f64)
}

/// Rank-based ROC-AUC with midrank tie handling: the probability that a
/// random outlier outscores a random inlier, counting ties as half.
pub fn roc_auc(scores: &ScoreVector, truth: &[u8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    require_both_classes(truth)?;
    let n = truth.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores.0[i].total_cmp(&scores.0[j]));
    // midranks over tie groups (1-based ranks)
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores.0[order[j + 1]] == scores.0[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count() as f64;
    let n_neg = n as f64 - n_pos;
    let rank_sum: f64 = ranks
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t == 1)
        .map(|(r, _)| *r)
        .sum();
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Average precision: sum of precision * recall-increment over descending
/// score thresholds, tie groups collapsed into single thresholds.
pub fn pr_auc(scores: &ScoreVector, truth: &[u8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    let total_pos = truth.iter().filter(|&&t| t == 1).count();
    if total_pos == 0 {
        return Err(Error::SingleClassTruth);
    }
    let n = truth.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores.0[j].total_cmp(&scores.0[i]));
    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores.0[order[j + 1]] == scores.0[order[i]] {
            j += 1;
        }
        let group_pos = order[i..=j]
            .iter()
            .filter(|&&idx| truth[idx] == 1)
            .count();
        tp += group_pos;
        seen += j - i + 1;
        if group_pos > 0 {
            let precision = tp as f64 / seen as f64;
            let delta_recall = group_pos as f64 / total_pos as f64;
            ap += precision * delta_recall;
        }
        i = j + 1;
    }
    Ok(ap)
}

/// Run a computation and measure its wall-clock duration in seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
