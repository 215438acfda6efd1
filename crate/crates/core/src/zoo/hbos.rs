//! Histogram-based outlier score: per-feature equal-width histograms over the
//! training range; a sample's score sums the log-inverse relative bin heights
//! across features. Values outside the training range fall into an implicit
//! empty bin and take the maximum per-feature penalty.

use ndarray::Array2;

use crate::error::Result;

use super::DetectorSpec;

const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone)]
pub(crate) struct FeatureHist {
    min: f64,
    max: f64,
    counts: Vec<usize>,
    max_count: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct HbosModel {
    features: Vec<FeatureHist>,
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<HbosModel> {
    let bins = spec.int_param("bins", DEFAULT_BINS);
    let features = x
        .columns()
        .into_iter()
        .map(|col| {
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut counts = vec![0usize; bins];
            for &v in col.iter() {
                counts[bin_of(v, min, max, bins).expect("training value is in range")] += 1;
            }
            let max_count = counts.iter().copied().max().unwrap_or(1).max(1);
            FeatureHist {
                min,
                max,
                counts,
                max_count,
            }
        })
        .collect();
    Ok(HbosModel { features })
}

fn bin_of(v: f64, min: f64, max: f64, bins: usize) -> Option<usize> {
    if v < min || v > max {
        return None;
    }
    if max == min {
        return Some(0);
    }
    let idx = ((v - min) / (max - min) * bins as f64) as usize;
    Some(idx.min(bins - 1))
}

pub(crate) fn score(model: &HbosModel, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(&model.features)
                .map(|(&v, hist)| {
                    let count = bin_of(v, hist.min, hist.max, hist.counts.len())
                        .map(|b| hist.counts[b])
                        .unwrap_or(0);
                    // +1 smoothing keeps empty/out-of-range bins finite while
                    // preserving the count ordering
                    ((hist.max_count as f64 + 1.0) / (count as f64 + 1.0)).ln()
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::Algorithm;
    use ndarray::array;

    #[test]
    fn rare_bins_score_higher() {
        let x = array![
            [0.0], [0.1], [0.05], [0.12], [0.07], [0.03], [0.09], [0.11], [10.0]
        ];
        let spec = DetectorSpec::new(Algorithm::Hbos).with("bins", 5.0);
        let model = fit(&spec, &x).unwrap();
        let scores = score(&model, &x);
        let max_idx = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(max_idx, 8);
    }

    #[test]
    fn out_of_range_scores_above_populated_bins() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let model = fit(&DetectorSpec::new(Algorithm::Hbos), &x).unwrap();
        let probe = array![[1.0], [99.0]];
        let s = score(&model, &probe);
        assert!(s[1] > s[0]);
    }

    #[test]
    fn constant_feature_is_neutral_for_matching_values() {
        let x = array![[5.0, 0.0], [5.0, 1.0], [5.0, 2.0]];
        let model = fit(&DetectorSpec::new(Algorithm::Hbos), &x).unwrap();
        let s = score(&model, &x);
        assert!(s.iter().all(|v| v.is_finite()));
    }
}
