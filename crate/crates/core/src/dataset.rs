//! Dataset loading, validation, normalization, and batching.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// A numeric sample matrix with optional ground-truth outlier labels.
///
/// Every cell is finite after construction; labels, when present, are 0
/// (inlier) or 1 (outlier) and aligned with rows of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub name: String,
    pub x: Array2<f64>,
    pub labels: Option<Vec<u8>>,
    pub feature_names: Option<Vec<String>>,
}

impl TabularDataset {
    pub fn new(
        name: impl Into<String>,
        x: Array2<f64>,
        labels: Option<Vec<u8>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let name = name.into();
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "dataset {name:?} must have at least one row and one column"
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            let (n, d) = (x.nrows(), x.ncols());
            return Err(Error::InvalidArgument(format!(
                "dataset {name:?} contains a non-finite cell at row {}, column {} (of {n}x{d})",
                bad / d + 1,
                bad % d + 1
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != x.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: x.nrows(),
                    actual: l.len(),
                });
            }
            if l.iter().any(|&v| v > 1) {
                return Err(Error::InvalidArgument(format!(
                    "dataset {name:?} labels must be 0 or 1"
                )));
            }
        }
        if let Some(ref f) = feature_names {
            if f.len() != x.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: x.ncols(),
                    actual: f.len(),
                });
            }
        }
        Ok(TabularDataset {
            name,
            x,
            labels,
            feature_names,
        })
    }

    /// Dataset with the same rows but a different matrix; keeps name/labels.
    pub fn with_matrix(&self, x: Array2<f64>) -> Result<Self> {
        TabularDataset::new(self.name.clone(), x, self.labels.clone(), None)
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_outliers(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().filter(|&&v| v == 1).count())
    }

    pub fn outlier_fraction(&self) -> Option<f64> {
        self.n_outliers()
            .map(|o| o as f64 / self.n_samples() as f64)
    }
}

/// Per-feature z-score transform with population (1/n) standard deviation.
/// Constant features have their zero std floored to 1 so `apply` is total and
/// maps them to all-zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Normalizer {
    pub fn fit(ds: &TabularDataset) -> Normalizer {
        let n = ds.n_samples() as f64;
        let mean = ds.x.mean_axis(Axis(0)).expect("non-empty dataset");
        let mut std = Array1::zeros(ds.n_features());
        for (j, col) in ds.x.axis_iter(Axis(1)).enumerate() {
            let m = mean[j];
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            std[j] = if s == 0.0 { 1.0 } else { s };
        }
        Normalizer { mean, std }
    }

    pub fn apply(&self, ds: &TabularDataset) -> Result<TabularDataset> {
        self.check_dims(ds.n_features())?;
        let mut x = ds.x.clone();
        for mut row in x.rows_mut() {
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
        ds.with_matrix(x)
    }

    pub fn invert(&self, ds: &TabularDataset) -> Result<TabularDataset> {
        self.check_dims(ds.n_features())?;
        let mut x = ds.x.clone();
        for mut row in x.rows_mut() {
            for j in 0..row.len() {
                row[j] = row[j] * self.std[j] + self.mean[j];
            }
        }
        ds.with_matrix(x)
    }

    /// Invert a bare matrix in this normalizer's feature space.
    pub fn invert_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_dims(x.ncols())?;
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for j in 0..row.len() {
                row[j] = row[j] * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }

    fn check_dims(&self, d: usize) -> Result<()> {
        if d != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: d,
            });
        }
        Ok(())
    }
}

/// Fit-and-apply convenience used before similarity, transformation, and
/// detection.
pub fn normalize(ds: &TabularDataset) -> Result<(Normalizer, TabularDataset)> {
    let norm = Normalizer::fit(ds);
    let out = norm.apply(ds)?;
    Ok((norm, out))
}

/// Load a dataset from a CSV file with a header row. When `label_column` is
/// given, that column is extracted as 0/1 labels; all other columns must parse
/// as finite reals. Rows with non-finite values are rejected with row/column
/// context, never dropped silently.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<TabularDataset> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(&display, std::io::Error::other(e.to_string())),
            _ => Error::CsvFormat {
                path: display.clone(),
                message: e.to_string(),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::CsvFormat {
            path: display.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::CsvFormat {
                path: display.clone(),
                message: format!("label column {name:?} not found in header"),
            }
        })?),
        None => None,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut n_rows = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1; // 1-based data row, header excluded
        let record = record.map_err(|e| Error::CsvFormat {
            path: display.clone(),
            message: format!("data row {row}: {e}"),
        })?;
        if record.len() != headers.len() {
            return Err(Error::CsvFormat {
                path: display.clone(),
                message: format!(
                    "data row {row} has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (col_idx, cell) in record.iter().enumerate() {
            let column = headers[col_idx].clone();
            let value: f64 = cell.parse().map_err(|_| Error::CsvCell {
                row,
                column: column.clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if Some(col_idx) == label_idx {
                if value == 0.0 {
                    labels.push(0);
                } else if value == 1.0 {
                    labels.push(1);
                } else {
                    return Err(Error::CsvCell {
                        row,
                        column,
                        message: format!("label {cell:?} is not 0 or 1"),
                    });
                }
            } else {
                if !value.is_finite() {
                    return Err(Error::CsvCell {
                        row,
                        column,
                        message: format!("{cell:?} is not finite"),
                    });
                }
                rows.push(value);
            }
        }
        n_rows += 1;
    }

    if n_rows == 0 {
        return Err(Error::CsvFormat {
            path: display,
            message: "no data rows".to_string(),
        });
    }
    let d = feature_names.len();
    if d == 0 {
        return Err(Error::CsvFormat {
            path: display,
            message: "no feature columns".to_string(),
        });
    }
    let x = Array2::from_shape_vec((n_rows, d), rows).expect("row-major cell count");
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    TabularDataset::new(
        name,
        x,
        label_idx.map(|_| labels),
        Some(feature_names),
    )
}

/// Write a dataset as CSV (features first, optional label column last).
/// Values print in shortest round-trip form, so load(save(ds)) reproduces the
/// matrix exactly.
pub fn save_csv(ds: &TabularDataset, path: &Path, label_column: Option<&str>) -> Result<()> {
    let display = path.display().to_string();
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::io(&display, std::io::Error::other(e.to_string()))
    })?;
    let mut header: Vec<String> = match &ds.feature_names {
        Some(names) => names.clone(),
        None => (0..ds.n_features()).map(|j| format!("f{j}")).collect(),
    };
    let label_name = label_column.unwrap_or("label").to_string();
    if ds.labels.is_some() {
        header.push(label_name);
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::io(&display, std::io::Error::other(e.to_string())))?;
    for (i, row) in ds.x.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(ref l) = ds.labels {
            record.push(format!("{}", l[i]));
        }
        writer
            .write_record(&record)
            .map_err(|e| Error::io(&display, std::io::Error::other(e.to_string())))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(&display, e))?;
    Ok(())
}

/// Seeded shuffle of `0..n` chunked into index batches. Every index appears
/// exactly once; the last batch may be short.
pub fn minibatch_indices(n: usize, batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(seed);
    order.shuffle(&mut rng);
    Ok(order.chunks(batch_size).map(|c| c.to_vec()).collect())
}

/// Seeded minibatch partition of a dataset's rows. Identical seeds give
/// identical batch sequences.
pub fn minibatches(ds: &TabularDataset, batch_size: usize, seed: u64) -> Result<Vec<Array2<f64>>> {
    let batches = minibatch_indices(ds.n_samples(), batch_size, seed)?;
    Ok(batches
        .into_iter()
        .map(|idxs| ds.x.select(Axis(0), &idxs))
        .collect())
}
