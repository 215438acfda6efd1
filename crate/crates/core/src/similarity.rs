//! PCA reconstruction-error curves and the curve-based dataset similarity
//! measure.
//!
//! A dataset's fingerprint is the mean reconstruction error after projecting
//! onto its top-k principal components, for k = 1..=100. The curve is padded
//! with the exact-reconstruction value beyond the feature count, which keeps
//! the fingerprint length fixed and the similarity measure well-defined
//! between datasets of different dimensionality. Two datasets are compared by
//! the sum of absolute differences (SAD) between their curves; smaller SAD
//! means more similar.
//!
//! PCA runs as an exact symmetric eigendecomposition (cyclic Jacobi) of the
//! (1/n)·XᵀX covariance — deterministic, no randomized methods.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize, TabularDataset};
use crate::error::{Error, Result};
use crate::index::{PublicIndex, PublicIndexEntry};

/// Fixed fingerprint length: reconstruction errors for 1..=CURVE_LEN retained
/// components.
pub const CURVE_LEN: usize = 100;

/// Principal-component model: per-feature mean, orthonormal component rows in
/// descending eigenvalue order, and the matching eigenvalues.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `[k x D]`, rows are principal directions.
    pub components: Array2<f64>,
    /// Length k, non-increasing, non-negative.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }

    /// Model restricted to the top `k` components.
    pub fn truncate(&self, k: usize) -> Result<PcaModel> {
        if k == 0 || k > self.n_components() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate {}-component model to k={k}",
                self.n_components()
            )));
        }
        Ok(PcaModel {
            mean: self.mean.clone(),
            components: self.components.slice(ndarray::s![..k, ..]).to_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues (descending) and eigenvectors as matrix columns in the same
/// order. Deterministic; converges quadratically for the well-conditioned
/// covariance matrices seen here.
fn jacobi_eigen(sym: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let d = sym.nrows();
    debug_assert_eq!(d, sym.ncols());
    let mut a = sym.clone();
    let mut v: Array2<f64> = Array2::eye(d);
    let scale: f64 = sym.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..d.saturating_sub(1) {
            for q in (p + 1)..d {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[[p, p]];
                let aqq = a[[q, q]];
                a[[p, p]] = app - t * apq;
                a[[q, q]] = aqq + t * apq;
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..d {
                    if k != p && k != q {
                        let akp = a[[k, p]];
                        let akq = a[[k, q]];
                        a[[k, p]] = akp - s * (akq + tau * akp);
                        a[[p, k]] = a[[k, p]];
                        a[[k, q]] = akq + s * (akp - tau * akq);
                        a[[q, k]] = a[[k, q]];
                    }
                }
                for k in 0..d {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = vkp - s * (vkq + tau * vkp);
                    v[[k, q]] = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).expect("finite").then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[[i, i]].max(0.0)).collect();
    let mut vectors = Array2::zeros((d, d));
    for (col, &i) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(i));
    }
    Ok((eigenvalues, vectors))
}

/// Top-k PCA of `x` via exact eigendecomposition of the population covariance.
/// The sign of each component is fixed so its largest-magnitude entry is
/// positive, making the decomposition fully deterministic.
pub fn pca_fit(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.nrows(), x.ncols());
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={d}, got {k}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = x - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / n as f64;
    let (eigenvalues, vectors) = jacobi_eigen(&cov)?;

    let mut components = Array2::zeros((k, d));
    for i in 0..k {
        let col = vectors.column(i);
        // first largest-magnitude entry decides the sign
        let mut pivot = 0usize;
        for (j, val) in col.iter().enumerate() {
            if val.abs() > col[pivot].abs() {
                pivot = j;
            }
        }
        let flip = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[i, j]] = flip * col[j];
        }
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues: eigenvalues[..k].to_vec(),
    })
}

/// Mean squared reconstruction error per cell: project `x` onto the component
/// span, back-project, add the mean, and average the squared residual over
/// all n x D cells.
pub fn reconstruction_error(x: &Array2<f64>, model: &PcaModel) -> Result<f64> {
    if x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: x.ncols(),
        });
    }
    let centered = x - &model.mean.view().insert_axis(Axis(0));
    let scores = centered.dot(&model.components.t());
    let recon = scores.dot(&model.components);
    let resid = &centered - &recon;
    let (n, d) = (x.nrows(), x.ncols());
    Ok(resid.iter().map(|r| r * r).sum::<f64>() / (n * d) as f64)
}

/// Mean PCA reconstruction error as a function of retained components,
/// evaluated for k = 1..=100 with min(k, D) components. Non-increasing; zero
/// (within float noise) for every k >= D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReconstructionCurve {
    errors: Vec<f64>,
}

impl ReconstructionCurve {
    /// Validates length, finiteness, non-negativity, and monotonicity (within
    /// 1e-9 slack for float noise).
    pub fn new(errors: Vec<f64>) -> Result<Self> {
        if errors.len() != CURVE_LEN {
            return Err(Error::InvalidArgument(format!(
                "curve must have {CURVE_LEN} entries, got {}",
                errors.len()
            )));
        }
        for (i, &e) in errors.iter().enumerate() {
            if !e.is_finite() || e < -1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "curve entry {i} is {e}, expected a finite non-negative value"
                )));
            }
            if i > 0 && e > errors[i - 1] + 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "curve increases at k={}: {} -> {e}",
                    i + 1,
                    errors[i - 1]
                )));
            }
        }
        Ok(ReconstructionCurve { errors })
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    /// Error at k retained components (1-based).
    pub fn at(&self, k: usize) -> f64 {
        self.errors[k - 1]
    }

    /// "k,error" rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,error\n");
        for (i, e) in self.errors.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, e));
        }
        out
    }
}

/// Compute the reconstruction curve of a dataset as given (callers normalize
/// first when comparability across feature scales matters).
pub fn reconstruction_curve(ds: &TabularDataset) -> Result<ReconstructionCurve> {
    let d = ds.n_features();
    let k_max = d.min(CURVE_LEN);
    let full = pca_fit(&ds.x, k_max)?;
    let mut errors = Vec::with_capacity(CURVE_LEN);
    for k in 1..=k_max {
        errors.push(reconstruction_error(&ds.x, &full.truncate(k)?)?);
    }
    let tail = errors[k_max - 1];
    errors.resize(CURVE_LEN, tail);
    // monotonicity holds up to float noise; flush it so the invariant is exact
    for i in 1..CURVE_LEN {
        if errors[i] > errors[i - 1] {
            errors[i] = errors[i].min(errors[i - 1] + 1e-9);
        }
    }
    ReconstructionCurve::new(errors)
}

/// Curve of the z-scored dataset — the fingerprint used for ranking and
/// stored in index manifests.
pub fn normalized_curve(ds: &TabularDataset) -> Result<ReconstructionCurve> {
    let (_, z) = normalize(ds)?;
    reconstruction_curve(&z)
}

/// Sum of absolute differences between two curves. Symmetric, non-negative;
/// smaller means more similar.
pub fn sad(a: &ReconstructionCurve, b: &ReconstructionCurve) -> f64 {
    a.errors
        .iter()
        .zip(&b.errors)
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// Rank index entries by ascending SAD to the private dataset (most similar
/// first); ties break lexicographically by dataset name.
pub fn rank_similar<'a>(
    private: &TabularDataset,
    index: &'a PublicIndex,
) -> Result<Vec<(&'a PublicIndexEntry, f64)>> {
    if index.entries.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let curve = normalized_curve(private)?;
    let mut ranked: Vec<(&PublicIndexEntry, f64)> = index
        .entries
        .iter()
        .map(|e| (e, sad(&curve, &e.curve)))
        .collect();
    ranked.sort_by(|(ea, sa), (eb, sb)| {
        sa.partial_cmp(sb)
            .expect("finite sad")
            .then_with(|| ea.dataset_name.cmp(&eb.dataset_name))
    });
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::array;

    #[test]
    fn rank_one_data_has_diagonal_first_component() {
        // points on the line x2 = x1
        let x = array![[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0], [0.5, 0.5]];
        let model = pca_fit(&x, 2).unwrap();
        let c = model.components.row(0);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - inv_sqrt2).abs() < 1e-10);
        assert!((c[1] - inv_sqrt2).abs() < 1e-10);
        assert!(model.eigenvalues[1].abs() < 1e-12);
    }

    #[test]
    fn full_basis_reconstructs_exactly() {
        let x = synth::standard_normal(30, 5, 11);
        let model = pca_fit(&x, 5).unwrap();
        assert!(reconstruction_error(&x, &model).unwrap() < 1e-8);
    }

    #[test]
    fn components_are_orthonormal() {
        let x = synth::standard_normal(40, 6, 3);
        let model = pca_fit(&x, 6).unwrap();
        let gram = model.components.dot(&model.components.t());
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigenvalues_sorted_non_increasing() {
        let x = synth::standard_normal(60, 8, 17);
        let model = pca_fit(&x, 8).unwrap();
        for w in model.eigenvalues.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_dense_oracle() {
        for seed in 0..5u64 {
            let x = synth::standard_normal(50, 5, 100 + seed);
            let model = pca_fit(&x, 5).unwrap();
            let oracle = dense_eigen_oracle(&x);
            for (a, b) in model.eigenvalues.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    // independent route: nalgebra's symmetric eigensolver on the covariance
    fn dense_eigen_oracle(x: &Array2<f64>) -> Vec<f64> {
        let (n, d) = (x.nrows(), x.ncols());
        let mean = x.mean_axis(Axis(0)).unwrap();
        let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for r in 0..n {
                    s += (x[[r, i]] - mean[i]) * (x[[r, j]] - mean[j]);
                }
                cov[(i, j)] = s / n as f64;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    #[test]
    fn pca_rejects_out_of_range_k() {
        let x = synth::standard_normal(10, 3, 1);
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 4).is_err());
    }

    #[test]
    fn reconstruction_error_zero_in_span() {
        // data in the span of the first axis
        let x = array![[1.0, 0.0], [2.0, 0.0], [-3.0, 0.0]];
        let model = pca_fit(&x, 1).unwrap();
        assert!(reconstruction_error(&x, &model).unwrap() < 1e-10);
    }

    #[test]
    fn reconstruction_error_matches_discarded_eigenvalue_sum() {
        // mean cell error with k components = sum of discarded eigenvalues / D
        let x = synth::standard_normal(20, 4, 5);
        let full = pca_fit(&x, 4).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        let direct = reconstruction_error(&x, &model).unwrap();
        let from_spectrum: f64 =
            full.eigenvalues[2..].iter().sum::<f64>() / 4.0;
        assert!((direct - from_spectrum).abs() < 1e-8);
    }

    #[test]
    fn curve_pads_beyond_feature_count() {
        let ds = TabularDataset::new("d3", synth::standard_normal(25, 3, 9), None, None).unwrap();
        let curve = reconstruction_curve(&ds).unwrap();
        for k in 3..=CURVE_LEN {
            assert!(curve.at(k).abs() < 1e-8, "k={k}: {}", curve.at(k));
        }
    }

    #[test]
    fn curve_is_non_increasing() {
        let ds = TabularDataset::new("d", synth::standard_normal(40, 7, 2), None, None).unwrap();
        let curve = reconstruction_curve(&ds).unwrap();
        for k in 2..=CURVE_LEN {
            assert!(curve.at(k) <= curve.at(k - 1) + 1e-9);
        }
    }

    #[test]
    fn curve_first_entry_matches_trace_identity_on_zscored_data() {
        // on z-scored data the covariance trace is D, so the error at k=1 is
        // (D - lambda_1) / D
        let raw = TabularDataset::new("d", synth::equicorrelated(200, 6, 0.5, 4), None, None)
            .unwrap();
        let z = normalize(&raw).unwrap().1;
        let curve = reconstruction_curve(&z).unwrap();
        let top = pca_fit(&z.x, 1).unwrap().eigenvalues[0];
        let expected = (6.0 - top) / 6.0;
        assert!((curve.at(1) - expected).abs() < 1e-8);
    }

    #[test]
    fn curve_invariant_under_row_shuffle() {
        let ds = TabularDataset::new("d", synth::standard_normal(30, 5, 21), None, None).unwrap();
        let curve = reconstruction_curve(&ds).unwrap();
        let mut idx: Vec<usize> = (0..30).collect();
        idx.reverse();
        idx.swap(3, 17);
        let shuffled = ds.with_matrix(ds.x.select(Axis(0), &idx)).unwrap();
        let curve2 = reconstruction_curve(&shuffled).unwrap();
        for k in 1..=CURVE_LEN {
            assert!((curve.at(k) - curve2.at(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn sad_hand_case() {
        let mut a = vec![0.0; CURVE_LEN];
        let mut b = vec![0.0; CURVE_LEN];
        a[0] = 0.5;
        a[1] = 0.2;
        b[0] = 0.4;
        b[1] = 0.1;
        let ca = ReconstructionCurve::new(a).unwrap();
        let cb = ReconstructionCurve::new(b).unwrap();
        assert!((sad(&ca, &cb) - 0.2).abs() < 1e-12);
        assert_eq!(sad(&ca, &ca), 0.0);
        assert_eq!(sad(&ca, &cb), sad(&cb, &ca));
    }

    #[test]
    fn curves_comparable_across_dimensionalities() {
        let small =
            TabularDataset::new("s", synth::standard_normal(50, 5, 8), None, None).unwrap();
        let large =
            TabularDataset::new("l", synth::standard_normal(50, 80, 8), None, None).unwrap();
        let cs = normalized_curve(&small).unwrap();
        let cl = normalized_curve(&large).unwrap();
        let v = sad(&cs, &cl);
        assert!(v.is_finite() && v >= 0.0);
    }
}
