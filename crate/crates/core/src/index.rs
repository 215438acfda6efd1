//! The persistent public-dataset index.
//!
//! On disk the index is a directory of JSON manifests (one per dataset) plus a
//! top-level `index.json` listing manifest paths and a schema version. Each
//! manifest carries the dataset's stats, its stored reconstruction curve, and
//! the ranked best detector specs with their known metrics; curves missing
//! from a manifest are recomputed from the data and written back so later
//! queries never re-run PCA.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, TabularDataset};
use crate::error::{Error, Result};
use crate::similarity::{normalized_curve, ReconstructionCurve, CURVE_LEN};
use crate::zoo::DetectorSpec;

pub const INDEX_SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE_NAME: &str = "index.json";

/// A detector spec with the metric it is known to achieve on its dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub algorithm: crate::zoo::Algorithm,
    #[serde(default)]
    pub hyperparams: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    pub metric_name: String,
    pub metric_value: f64,
}

impl RankedModel {
    pub fn spec(&self) -> DetectorSpec {
        DetectorSpec {
            algorithm: self.algorithm,
            hyperparams: self.hyperparams.clone(),
            seed: self.seed,
        }
    }

    pub fn from_spec(spec: &DetectorSpec, metric_name: &str, metric_value: f64) -> Self {
        RankedModel {
            algorithm: spec.algorithm,
            hyperparams: spec.hyperparams.clone(),
            seed: spec.seed,
            metric_name: metric_name.to_string(),
            metric_value,
        }
    }
}

/// One public dataset's manifest: stats, fingerprint curve, and its ranked
/// best models (descending by known metric).
#[derive(Debug, Clone)]
pub struct PublicIndexEntry {
    pub dataset_name: String,
    /// Resolved path to the dataset CSV.
    pub data_path: PathBuf,
    pub label_column: Option<String>,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_outliers: usize,
    pub outlier_fraction: f64,
    pub curve: ReconstructionCurve,
    pub best_models: Vec<RankedModel>,
}

impl PublicIndexEntry {
    pub fn load_data(&self) -> Result<TabularDataset> {
        let mut ds = load_csv(&self.data_path, self.label_column.as_deref())?;
        ds.name = self.dataset_name.clone();
        Ok(ds)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PublicIndex {
    /// Sorted by dataset name; names are unique.
    pub entries: Vec<PublicIndexEntry>,
    pub version: u32,
}

impl PublicIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&PublicIndexEntry> {
        self.entries.iter().find(|e| e.dataset_name == name)
    }

    /// New index with one more entry. The old value stays untouched, so
    /// concurrent readers keep a consistent view.
    pub fn register(&self, entry: PublicIndexEntry) -> Result<PublicIndex> {
        if self.get(&entry.dataset_name).is_some() {
            return Err(Error::DuplicateDataset(entry.dataset_name));
        }
        let mut entries = self.entries.clone();
        entries.push(entry);
        entries.sort_by(|a, b| a.dataset_name.cmp(&b.dataset_name));
        Ok(PublicIndex {
            entries,
            version: self.version,
        })
    }

    /// Index without the named entry — the leave-one-out view.
    pub fn without(&self, name: &str) -> PublicIndex {
        PublicIndex {
            entries: self
                .entries
                .iter()
                .filter(|e| e.dataset_name != name)
                .cloned()
                .collect(),
            version: self.version,
        }
    }

    /// Smallest best-model count across entries; bounds the usable `m`.
    pub fn min_model_count(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.best_models.len())
            .min()
            .unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// On-disk schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestFile {
    name: String,
    data_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_column: Option<String>,
    n_samples: usize,
    n_features: usize,
    n_outliers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curve: Option<Vec<f64>>,
    best_models: Vec<RankedModel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    schema_version: u32,
    manifests: Vec<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

fn validate_manifest(
    manifest: &ManifestFile,
    manifest_path: &Path,
) -> Result<(PathBuf, TabularDataset)> {
    let file = manifest_path.display().to_string();
    if manifest.name.is_empty() {
        return Err(Error::schema(&file, "empty dataset name"));
    }
    if manifest.best_models.is_empty() {
        return Err(Error::schema(&file, "best_models must be non-empty"));
    }
    for m in &manifest.best_models {
        m.spec()
            .validate()
            .map_err(|e| Error::schema(&file, format!("best_models entry: {e}")))?;
    }
    if manifest.n_outliers == 0 || manifest.n_outliers >= manifest.n_samples {
        return Err(Error::schema(
            &file,
            format!(
                "n_outliers={} must be in 1..n_samples={}",
                manifest.n_outliers, manifest.n_samples
            ),
        ));
    }
    if let Some(ref curve) = manifest.curve {
        if curve.len() != CURVE_LEN {
            return Err(Error::schema(
                &file,
                format!("curve must have {CURVE_LEN} entries, found {}", curve.len()),
            ));
        }
    }

    let data_path = resolve_data_path(manifest_path, &manifest.data_path);
    if !data_path.exists() {
        return Err(Error::schema(
            &file,
            format!("data file {} is missing", data_path.display()),
        ));
    }
    let data = load_csv(&data_path, manifest.label_column.as_deref())?;
    if data.n_samples() != manifest.n_samples {
        return Err(Error::schema(
            &file,
            format!(
                "n_samples={} but data file has {}",
                manifest.n_samples,
                data.n_samples()
            ),
        ));
    }
    if data.n_features() != manifest.n_features {
        return Err(Error::schema(
            &file,
            format!(
                "n_features={} but data file has {}",
                manifest.n_features,
                data.n_features()
            ),
        ));
    }
    if let Some(actual) = data.n_outliers() {
        if actual != manifest.n_outliers {
            return Err(Error::schema(
                &file,
                format!(
                    "n_outliers={} but labels mark {actual}",
                    manifest.n_outliers
                ),
            ));
        }
    }
    Ok((data_path, data))
}

fn resolve_data_path(manifest_path: &Path, data_path: &str) -> PathBuf {
    let p = PathBuf::from(data_path);
    if p.is_absolute() {
        p
    } else {
        manifest_path
            .parent()
            .unwrap_or(Path::new("."))
            .join(p)
    }
}

fn entry_from_manifest(
    manifest: ManifestFile,
    manifest_path: &Path,
    data_path: PathBuf,
    data: &TabularDataset,
    persist_curve: bool,
) -> Result<PublicIndexEntry> {
    let curve = match manifest.curve.clone() {
        Some(values) => ReconstructionCurve::new(values).map_err(|e| {
            Error::schema(manifest_path.display().to_string(), format!("curve: {e}"))
        })?,
        None => {
            let computed = normalized_curve(data)?;
            if persist_curve {
                let updated = ManifestFile {
                    curve: Some(computed.errors().to_vec()),
                    ..manifest.clone()
                };
                write_json(manifest_path, &updated)?;
                log::info!(
                    "computed and stored curve for {} in {}",
                    manifest.name,
                    manifest_path.display()
                );
            }
            computed
        }
    };
    Ok(PublicIndexEntry {
        dataset_name: manifest.name,
        data_path,
        label_column: manifest.label_column,
        n_samples: manifest.n_samples,
        n_features: manifest.n_features,
        n_outliers: manifest.n_outliers,
        outlier_fraction: manifest.n_outliers as f64 / manifest.n_samples as f64,
        curve,
        best_models: manifest.best_models,
    })
}

fn load_manifests(
    dir: &Path,
    manifest_names: &[String],
    persist_curves: bool,
) -> Result<Vec<PublicIndexEntry>> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for name in manifest_names {
        let path = dir.join(name);
        let manifest: ManifestFile = read_json(&path)?;
        if !seen.insert(manifest.name.clone()) {
            return Err(Error::DuplicateDataset(manifest.name));
        }
        let (data_path, data) = validate_manifest(&manifest, &path)?;
        entries.push(entry_from_manifest(
            manifest,
            &path,
            data_path,
            &data,
            persist_curves,
        )?);
    }
    entries.sort_by(|a, b| a.dataset_name.cmp(&b.dataset_name));
    Ok(entries)
}

fn manifest_files_in(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for item in read {
        let item = item.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let file_name = item.file_name().to_string_lossy().to_string();
        if file_name.ends_with(".json") && file_name != INDEX_FILE_NAME {
            names.push(file_name);
        }
    }
    names.sort();
    Ok(names)
}

/// Scan `dir` for manifests, validate them, compute any missing curves (and
/// write them back), and write the top-level index file.
pub fn build_index(dir: &Path) -> Result<PublicIndex> {
    let names = manifest_files_in(dir)?;
    let entries = load_manifests(dir, &names, true)?;
    let index_file = IndexFile {
        schema_version: INDEX_SCHEMA_VERSION,
        manifests: names,
    };
    write_json(&dir.join(INDEX_FILE_NAME), &index_file)?;
    Ok(PublicIndex {
        entries,
        version: INDEX_SCHEMA_VERSION,
    })
}

/// Read an index previously written by [`build_index`]. Missing curves are
/// computed in memory without touching the manifests.
pub fn load_index(dir: &Path) -> Result<PublicIndex> {
    let index_path = dir.join(INDEX_FILE_NAME);
    let index_file: IndexFile = read_json(&index_path)?;
    if index_file.schema_version != INDEX_SCHEMA_VERSION {
        return Err(Error::schema(
            index_path.display().to_string(),
            format!(
                "schema_version {} is not supported (expected {INDEX_SCHEMA_VERSION})",
                index_file.schema_version
            ),
        ));
    }
    let entries = load_manifests(dir, &index_file.manifests, false)?;
    Ok(PublicIndex {
        entries,
        version: index_file.schema_version,
    })
}

/// Validate one manifest file and append it to an existing on-disk index.
pub fn add_manifest(dir: &Path, manifest_path: &Path) -> Result<PublicIndex> {
    let index_path = dir.join(INDEX_FILE_NAME);
    let mut index_file: IndexFile = read_json(&index_path)?;
    let manifest: ManifestFile = read_json(manifest_path)?;

    let current = load_manifests(dir, &index_file.manifests, false)?;
    if current.iter().any(|e| e.dataset_name == manifest.name) {
        return Err(Error::DuplicateDataset(manifest.name));
    }

    let file_name = manifest_path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .ok_or_else(|| Error::schema(manifest_path.display().to_string(), "not a file"))?;
    let target = dir.join(&file_name);
    if target != manifest_path {
        fs::copy(manifest_path, &target)
            .map_err(|e| Error::io(target.display().to_string(), e))?;
    }
    let (data_path, data) = validate_manifest(&manifest, &target)?;
    entry_from_manifest(manifest, &target, data_path, &data, true)?;

    index_file.manifests.push(file_name);
    index_file.manifests.sort();
    index_file.manifests.dedup();
    write_json(&index_path, &index_file)?;
    load_index(dir)
}

/// Write one entry as a manifest file (used when assembling an index from
/// labeled datasets programmatically). Returns the manifest path.
pub fn write_entry_manifest(dir: &Path, entry: &PublicIndexEntry) -> Result<PathBuf> {
    let manifest = ManifestFile {
        name: entry.dataset_name.clone(),
        data_path: entry.data_path.display().to_string(),
        label_column: entry.label_column.clone(),
        n_samples: entry.n_samples,
        n_features: entry.n_features,
        n_outliers: entry.n_outliers,
        curve: Some(entry.curve.errors().to_vec()),
        best_models: entry.best_models.clone(),
    };
    let path = dir.join(format!("{}.json", entry.dataset_name));
    write_json(&path, &manifest)?;
    Ok(path)
}
