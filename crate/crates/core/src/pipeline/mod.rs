//! Soft-label generation: candidate walking, transformation checking, vote
//! collection, and majority fusion.
//!
//! Two strategies share the machinery. The single-dataset method walks the
//! similarity ranking until one transformation succeeds and applies that
//! dataset's best `m` detectors to the crossover rows. The multi-dataset
//! method keeps walking until `n` transformations succeed and applies each
//! winning dataset's single best detector. Both fuse the collected binary
//! votes by majority into one label vector, mapped back to input rows (the
//! transformation is row-aligned by construction).
//!
//! A candidate whose data is bit-identical to the private dataset skips
//! training: its models already accept the private rows, so they are applied
//! directly and the attempt is recorded as an immediate success. Every other
//! candidate trains a transcoder and must strictly win the curve-difference
//! check; training divergence counts as failure and is noted in the trail.

pub mod baselines;
pub mod benchmark;

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{normalize, TabularDataset};
use crate::error::{Error, Result};
use crate::eval::timed;
use crate::index::{PublicIndex, PublicIndexEntry, RankedModel};
use crate::parallel::parallel_map;
use crate::seed::derive_seed;
use crate::similarity::rank_similar;
use crate::transcoder::{crossover, init_transcoder, train, transformation_success, TranscoderConfig};
use crate::zoo::{self, DetectorSpec};

/// Soft-labeling strategy (or baseline) that produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "TOP1_DS")]
    Top1Ds,
    #[serde(rename = "TOPN_DS")]
    TopNDs,
    #[serde(rename = "AVG_OD")]
    AvgOd,
    #[serde(rename = "DEFAULT_OD")]
    DefaultOd,
    #[serde(rename = "BEST_OD")]
    BestOd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Top1Ds => "TOP1_DS",
            Method::TopNDs => "TOPN_DS",
            Method::AvgOd => "AVG_OD",
            Method::DefaultOd => "DEFAULT_OD",
            Method::BestOd => "BEST_OD",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "top1" | "top1_ds" => Ok(Method::Top1Ds),
            "topn" | "topn_ds" => Ok(Method::TopNDs),
            "avg_od" | "avg" => Ok(Method::AvgOd),
            "default_od" | "default" => Ok(Method::DefaultOd),
            "best_od" | "best" => Ok(Method::BestOd),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// How an exactly split vote resolves. Outliers are the rare class, so the
/// default leaves undecided samples as inliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    #[default]
    Inlier,
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Best models taken from the selected dataset (single-dataset method).
    pub m: usize,
    /// Successful transformations collected (multi-dataset method).
    pub n: usize,
    pub tie_policy: TiePolicy,
    /// Candidates tried before giving up; defaults to the index size.
    pub max_fallbacks: Option<usize>,
    pub seed: u64,
    pub transcoder: TranscoderConfig,
    /// Assumed contamination when thresholding scores on the private data
    /// itself (baselines only; the private rate is unknown by premise).
    pub default_contamination: f64,
    /// Worker threads for independent units (candidate transformations,
    /// grid fits). 1 keeps everything sequential.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: 3,
            n: 3,
            tie_policy: TiePolicy::Inlier,
            max_fallbacks: None,
            seed: 42,
            transcoder: TranscoderConfig::default(),
            default_contamination: 0.1,
            threads: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, index: &PublicIndex) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("m and n must be >= 1".into()));
        }
        if index.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if self.n > index.len() {
            return Err(Error::InvalidArgument(format!(
                "n={} exceeds the index size {}",
                self.n,
                index.len()
            )));
        }
        if self.m > index.min_model_count() {
            return Err(Error::InvalidArgument(format!(
                "m={} exceeds the smallest best-model list in the index ({})",
                self.m,
                index.min_model_count()
            )));
        }
        if !(self.default_contamination > 0.0 && self.default_contamination < 1.0) {
            return Err(Error::InvalidArgument(
                "default_contamination must be in (0, 1)".into(),
            ));
        }
        self.transcoder.validate()
    }

    /// Stable digest of the full configuration plus the method, written into
    /// every run for byte-exact reproduction.
    pub fn digest(&self, method: Method) -> String {
        let payload = serde_json::json!({
            "method": method.name(),
            "config": self,
        });
        let mut hasher = Sha256::new();
        hasher.update(payload.to_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn fallback_limit(&self, index: &PublicIndex) -> usize {
        self.max_fallbacks.unwrap_or(index.len()).min(index.len())
    }
}

/// One dataset/detector pair that contributed a vote row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterProvenance {
    pub dataset: String,
    pub spec: DetectorSpec,
}

/// One candidate evaluation in ranking order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackAttempt {
    pub dataset: String,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Fused soft labels plus everything needed to recompute and audit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelRun {
    pub method: Method,
    pub labels: Vec<u8>,
    /// One row per voter, aligned with `labels`.
    pub votes: Vec<Vec<u8>>,
    pub provenance: Vec<VoterProvenance>,
    pub timings: BTreeMap<String, f64>,
    pub fallback_trail: Vec<FallbackAttempt>,
    pub config_digest: String,
}

impl SoftLabelRun {
    /// JSON form. Timings are wall-clock noise; dropping them makes the
    /// output byte-identical across reruns with the same seed.
    pub fn to_json(&self, include_timings: bool) -> String {
        let mut value = serde_json::to_value(self).expect("run serializes");
        if !include_timings {
            value.as_object_mut().expect("object").remove("timings");
        }
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    /// Single-column CSV aligned to input rows.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("label\n");
        for l in &self.labels {
            out.push_str(&format!("{l}\n"));
        }
        out
    }
}

/// Per sample: 1 iff strictly more than half the voters said 1; exact ties
/// resolve by policy.
pub fn majority_vote(votes: &[Vec<u8>], tie_policy: TiePolicy) -> Result<Vec<u8>> {
    let Some(first) = votes.first() else {
        return Err(Error::InvalidArgument("majority vote needs >= 1 voter".into()));
    };
    let n = first.len();
    if votes.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: votes.iter().map(|r| r.len()).find(|&l| l != n).unwrap_or(n),
        });
    }
    let voters = votes.len();
    let mut labels = vec![0u8; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let ones = votes.iter().filter(|row| row[i] == 1).count();
        let zeros = voters - ones;
        *label = match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => match tie_policy {
                TiePolicy::Inlier => 0,
                TiePolicy::Outlier => 1,
            },
        };
    }
    Ok(labels)
}

// ---------------------------------------------------------------------------
// Candidate evaluation
// ---------------------------------------------------------------------------

enum Outcome {
    /// Transformation succeeded; crossover rows and the normalized public
    /// data are kept for prediction.
    Success {
        co: Array2<f64>,
        pub_n: TabularDataset,
        note: Option<String>,
    },
    Failed {
        note: Option<String>,
    },
}

struct CandidateEval {
    outcome: Outcome,
    seconds: f64,
}

fn evaluate_candidate(
    prv_n: &TabularDataset,
    entry: &PublicIndexEntry,
    cfg: &PipelineConfig,
) -> Result<CandidateEval> {
    let (result, seconds) = timed(|| -> Result<Outcome> {
        let raw = entry.load_data()?;
        let (_, pub_n) = normalize(&raw)?;

        if pub_n.x == prv_n.x {
            log::info!(
                "{} is identical to the private dataset; applying its models directly",
                entry.dataset_name
            );
            return Ok(Outcome::Success {
                co: prv_n.x.clone(),
                pub_n,
                note: Some("identical dataset; models applied directly".into()),
            });
        }

        let mut tcfg = cfg.transcoder.clone();
        tcfg.seed = derive_seed(
            cfg.seed,
            &format!("transcoder/{}->{}", prv_n.name, entry.dataset_name),
        );
        let mut model = init_transcoder(
            &tcfg,
            prv_n.n_features(),
            pub_n.n_features(),
            derive_seed(tcfg.seed, "init"),
        )?;
        match train(&mut model, prv_n, &pub_n) {
            Ok(_) => {}
            Err(Error::Divergence { epoch }) => {
                return Ok(Outcome::Failed {
                    note: Some(format!("training diverged at epoch {epoch}")),
                })
            }
            Err(other) => return Err(other),
        }
        let co = crossover(&model, &prv_n.x)?;
        if co.iter().any(|v| !v.is_finite()) {
            return Ok(Outcome::Failed {
                note: Some("crossover produced non-finite values".into()),
            });
        }
        let co_ds = TabularDataset::new("crossover", co.clone(), None, None)?;
        if transformation_success(prv_n, &pub_n, &co_ds)? {
            Ok(Outcome::Success {
                co,
                pub_n,
                note: None,
            })
        } else {
            Ok(Outcome::Failed { note: None })
        }
    });
    Ok(CandidateEval {
        outcome: result?,
        seconds,
    })
}

struct Success {
    entry_name: String,
    co: Array2<f64>,
    pub_n: TabularDataset,
}

struct Walk {
    successes: Vec<Success>,
    trail: Vec<FallbackAttempt>,
    attempts: usize,
    transform_seconds: f64,
}

/// Walk the ranking in order until `needed` transformations succeed, within
/// `limit` attempts. Candidates are independent (seeds derive from names), so
/// chunks may evaluate in parallel without changing the outcome; the trail
/// records exactly the candidates a sequential walk would have touched.
fn walk_ranking(
    prv_n: &TabularDataset,
    ranking: &[(&PublicIndexEntry, f64)],
    needed: usize,
    limit: usize,
    cfg: &PipelineConfig,
) -> Result<Walk> {
    let mut walk = Walk {
        successes: Vec::new(),
        trail: Vec::new(),
        attempts: 0,
        transform_seconds: 0.0,
    };
    let candidates = &ranking[..limit.min(ranking.len())];
    let chunk_size = cfg.threads.max(1);
    let mut next = 0usize;
    while next < candidates.len() && walk.successes.len() < needed {
        let chunk = &candidates[next..(next + chunk_size).min(candidates.len())];
        let evals = parallel_map(chunk, cfg.threads, |(entry, _)| {
            evaluate_candidate(prv_n, entry, cfg)
        });
        for ((entry, _), eval) in chunk.iter().zip(evals) {
            if walk.successes.len() >= needed {
                break; // speculative extras stay out of the trail
            }
            let eval = eval?;
            walk.attempts += 1;
            walk.transform_seconds += eval.seconds;
            match eval.outcome {
                Outcome::Success { co, pub_n, note } => {
                    walk.trail.push(FallbackAttempt {
                        dataset: entry.dataset_name.clone(),
                        success: true,
                        note,
                    });
                    walk.successes.push(Success {
                        entry_name: entry.dataset_name.clone(),
                        co,
                        pub_n,
                    });
                }
                Outcome::Failed { note } => {
                    walk.trail.push(FallbackAttempt {
                        dataset: entry.dataset_name.clone(),
                        success: false,
                        note,
                    });
                }
            }
        }
        next += chunk.len();
    }
    Ok(walk)
}

/// Fit the given ranked models on the public data, score the crossover rows,
/// and threshold by the entry's known outlier fraction.
fn votes_from_models(
    entry: &PublicIndexEntry,
    pub_n: &TabularDataset,
    co: &Array2<f64>,
    models: &[RankedModel],
    cfg: &PipelineConfig,
) -> Result<Vec<(Vec<u8>, VoterProvenance)>> {
    let jobs: Vec<(usize, &RankedModel)> = models.iter().enumerate().collect();
    let results = parallel_map(&jobs, cfg.threads, |(idx, model)| -> Result<_> {
        let mut spec = model.spec();
        spec.seed = derive_seed(
            cfg.seed,
            &format!("detector/{}/{}/{}", entry.dataset_name, spec.algorithm, idx),
        );
        let det = zoo::fit(&spec, &pub_n.x)?;
        let scores = zoo::score(&det, co)?;
        let vote = zoo::threshold_labels(&scores, entry.outlier_fraction)?;
        Ok((
            vote,
            VoterProvenance {
                dataset: entry.dataset_name.clone(),
                spec,
            },
        ))
    });
    results.into_iter().collect()
}

fn finish_run(
    method: Method,
    votes_with_provenance: Vec<(Vec<u8>, VoterProvenance)>,
    trail: Vec<FallbackAttempt>,
    mut timings: BTreeMap<String, f64>,
    cfg: &PipelineConfig,
) -> Result<SoftLabelRun> {
    let (votes, provenance): (Vec<Vec<u8>>, Vec<VoterProvenance>) =
        votes_with_provenance.into_iter().unzip();
    let (labels, fuse_seconds) = timed(|| majority_vote(&votes, cfg.tie_policy));
    timings.insert("fusion".into(), fuse_seconds);
    Ok(SoftLabelRun {
        method,
        labels: labels?,
        votes,
        provenance,
        timings,
        fallback_trail: trail,
        config_digest: cfg.digest(method),
    })
}

/// Single-dataset strategy: first Eq-check-passing candidate in the ranking
/// contributes its best `m` detectors.
pub fn method1_top1(
    private: &TabularDataset,
    index: &PublicIndex,
    cfg: &PipelineConfig,
) -> Result<SoftLabelRun> {
    cfg.validate(index)?;
    let mut timings = BTreeMap::new();
    let ((_, prv_n), norm_seconds) = timed(|| normalize(private)).into_checked()?;
    timings.insert("normalization".into(), norm_seconds);
    let (ranking, sim_seconds) = timed(|| rank_similar(&prv_n, index)).into_checked()?;
    timings.insert("similarity".into(), sim_seconds);

    let limit = cfg.fallback_limit(index);
    let walk = walk_ranking(&prv_n, &ranking, 1, limit, cfg)?;
    timings.insert("transformation".into(), walk.transform_seconds);
    let Some(success) = walk.successes.into_iter().next() else {
        return Err(Error::Exhausted {
            attempts: walk.attempts,
            successes: 0,
            required: 1,
            trail: walk.trail,
            partial: None,
        });
    };
    let entry = index.get(&success.entry_name).expect("ranked entry exists");
    let (votes, predict_seconds) = timed(|| {
        votes_from_models(
            entry,
            &success.pub_n,
            &success.co,
            &entry.best_models[..cfg.m],
            cfg,
        )
    });
    timings.insert("prediction".into(), predict_seconds);
    finish_run(Method::Top1Ds, votes?, walk.trail, timings, cfg)
}

/// Multi-dataset strategy: the first `n` Eq-check-passing candidates each
/// contribute their single best detector.
pub fn method2_topn(
    private: &TabularDataset,
    index: &PublicIndex,
    cfg: &PipelineConfig,
) -> Result<SoftLabelRun> {
    cfg.validate(index)?;
    let mut timings = BTreeMap::new();
    let ((_, prv_n), norm_seconds) = timed(|| normalize(private)).into_checked()?;
    timings.insert("normalization".into(), norm_seconds);
    let (ranking, sim_seconds) = timed(|| rank_similar(&prv_n, index)).into_checked()?;
    timings.insert("similarity".into(), sim_seconds);

    let limit = cfg.fallback_limit(index);
    let walk = walk_ranking(&prv_n, &ranking, cfg.n, limit, cfg)?;
    timings.insert("transformation".into(), walk.transform_seconds);

    let (votes, predict_seconds) = timed(|| -> Result<Vec<(Vec<u8>, VoterProvenance)>> {
        let mut all = Vec::with_capacity(walk.successes.len());
        for success in &walk.successes {
            let entry = index.get(&success.entry_name).expect("ranked entry exists");
            all.extend(votes_from_models(
                entry,
                &success.pub_n,
                &success.co,
                &entry.best_models[..1],
                cfg,
            )?);
        }
        Ok(all)
    });
    timings.insert("prediction".into(), predict_seconds);
    let votes = votes?;

    if walk.successes.len() < cfg.n {
        let partial = if votes.is_empty() {
            None
        } else {
            Some(Box::new(finish_run(
                Method::TopNDs,
                votes,
                walk.trail.clone(),
                timings,
                cfg,
            )?))
        };
        return Err(Error::Exhausted {
            attempts: walk.attempts,
            successes: walk.successes.len(),
            required: cfg.n,
            trail: walk.trail,
            partial,
        });
    }
    finish_run(Method::TopNDs, votes, walk.trail, timings, cfg)
}

/// Small adapter so `timed` can wrap fallible computations without losing the
/// elapsed time on the happy path.
trait TimedResult<T> {
    fn into_checked(self) -> Result<(T, f64)>;
}

impl<T> TimedResult<T> for (Result<T>, f64) {
    fn into_checked(self) -> Result<(T, f64)> {
        let (result, seconds) = self;
        Ok((result?, seconds))
    }
}
