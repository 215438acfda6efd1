//! Soft labeling for unlabeled tabular datasets in outlier-detection settings.
//!
//! The pipeline annotates an unlabeled ("private") numeric table by leaning on
//! an index of labeled ("public") benchmark datasets whose best-performing
//! outlier detectors are already known:
//!
//! 1. [`similarity`] fingerprints every dataset with its PCA reconstruction
//!    curve (mean reconstruction error for 1..=100 retained components) and
//!    ranks index entries by the sum of absolute differences between curves.
//! 2. [`transcoder`] trains a dual autoencoder — per-dataset encoder/decoder
//!    pairs around a shared bottleneck — on alternating batches from both
//!    datasets, then renders private rows in the public feature space
//!    ("crossover" samples).
//! 3. [`zoo`] provides seven classical unsupervised detectors behind one
//!    fit/score/threshold interface.
//! 4. [`pipeline`] walks the similarity ranking, validates each transformation,
//!    applies the chosen public models to the crossover rows, and fuses their
//!    binary votes by majority into soft labels with full provenance.
//!
//! [`eval`] supplies the usual detection metrics (balanced accuracy, F1,
//! PR-AUC, ROC-AUC), timing capture, and report emission; [`dataset`] and
//! [`index`] cover CSV ingestion, normalization, and the persistent manifest
//! index. [`synth`] holds seeded generators used by the test suites and
//! benchmarks.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod index;
pub mod mlp;
pub mod parallel;
pub mod pipeline;
pub mod seed;
pub mod similarity;
pub mod synth;
pub mod transcoder;
pub mod zoo;

pub use dataset::{Normalizer, TabularDataset};
pub use error::{Error, Result};
pub use index::{PublicIndex, PublicIndexEntry};
pub use pipeline::{Method, PipelineConfig, SoftLabelRun};
pub use similarity::{PcaModel, ReconstructionCurve};
pub use transcoder::{TranscoderConfig, TranscoderModel};
pub use zoo::{Algorithm, DetectorSpec, FittedDetector, ScoreVector};
