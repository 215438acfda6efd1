//! Local outlier factor: the ratio between the local reachability density of
//! a point's neighbors and its own. Inliers sit near 1, isolated points well
//! above it. Fit-time quantities (k-distances, densities) use self-excluded
//! neighborhoods over the training set; queries take their k nearest training
//! rows as found, including zero-distance matches.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::{all_rows_identical, squared_distance, DetectorSpec};

const DEFAULT_K: usize = 20;
const DENSITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LofModel {
    train: Array2<f64>,
    k: usize,
    k_distance: Vec<f64>,
    local_density: Vec<f64>,
}

struct Neighbors {
    idx: Vec<usize>,
    dist: Vec<f64>,
}

fn nearest_training(
    train: &Array2<f64>,
    row: ndarray::ArrayView1<f64>,
    k: usize,
    exclude: Option<usize>,
) -> Neighbors {
    let mut dists: Vec<(f64, usize)> = train
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, t)| (squared_distance(t, row).sqrt(), i))
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dists.truncate(k);
    Neighbors {
        idx: dists.iter().map(|(_, i)| *i).collect(),
        dist: dists.iter().map(|(d, _)| *d).collect(),
    }
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<LofModel> {
    let k = spec.int_param("k", DEFAULT_K);
    if x.nrows() <= k {
        return Err(Error::InvalidArgument(format!(
            "LOF: n must exceed k ({} samples, k={k})",
            x.nrows()
        )));
    }
    if all_rows_identical(x) {
        return Err(Error::DegenerateData(
            "LOF: all training rows identical".into(),
        ));
    }
    let n = x.nrows();
    let neighborhoods: Vec<Neighbors> = (0..n)
        .map(|i| nearest_training(x, x.row(i), k, Some(i)))
        .collect();
    let k_distance: Vec<f64> = neighborhoods
        .iter()
        .map(|nb| *nb.dist.last().expect("k >= 1"))
        .collect();
    let local_density: Vec<f64> = neighborhoods
        .iter()
        .map(|nb| {
            let reach_sum: f64 = nb
                .idx
                .iter()
                .zip(&nb.dist)
                .map(|(&j, &d)| d.max(k_distance[j]))
                .sum();
            1.0 / (reach_sum / nb.idx.len() as f64 + DENSITY_GUARD)
        })
        .collect();
    Ok(LofModel {
        train: x.clone(),
        k,
        k_distance,
        local_density,
    })
}

pub(crate) fn score(model: &LofModel, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| {
            let nb = nearest_training(&model.train, row, model.k, None);
            let reach_sum: f64 = nb
                .idx
                .iter()
                .zip(&nb.dist)
                .map(|(&j, &d)| d.max(model.k_distance[j]))
                .sum();
            let own_density = 1.0 / (reach_sum / nb.idx.len() as f64 + DENSITY_GUARD);
            let neighbor_density: f64 =
                nb.idx.iter().map(|&j| model.local_density[j]).sum::<f64>() / nb.idx.len() as f64;
            neighbor_density / own_density
        })
        .collect()
}
