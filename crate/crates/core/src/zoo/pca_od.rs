//! Subspace reconstruction score: fit a PCA basis on the training data and
//! score each sample by its squared residual off the retained subspace. With
//! a full basis every score collapses to zero.

use ndarray::{Array2, Axis};

use crate::error::Result;
use crate::similarity::{pca_fit, PcaModel};

use super::DetectorSpec;

const DEFAULT_MAX_COMPONENTS: usize = 10;

#[derive(Debug, Clone)]
pub(crate) struct PcaOdModel {
    pca: PcaModel,
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<PcaOdModel> {
    let d = x.ncols();
    let components = spec
        .int_param("components", d.min(DEFAULT_MAX_COMPONENTS))
        .min(d);
    Ok(PcaOdModel {
        pca: pca_fit(x, components)?,
    })
}

pub(crate) fn score(model: &PcaOdModel, x: &Array2<f64>) -> Vec<f64> {
    let centered = x - &model.pca.mean.view().insert_axis(Axis(0));
    let scores_matrix = centered.dot(&model.pca.components.t());
    let recon = scores_matrix.dot(&model.pca.components);
    let resid = &centered - &recon;
    resid
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}
