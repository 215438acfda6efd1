//! Isolation forest: an ensemble of random isolation trees built on seeded
//! subsamples. Anomalies isolate in short paths; the score is
//! `2^(-E[path] / c(subsample))`, in (0, 1), higher = more outlying.

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::seed::{derive_seed, rng_from};

use super::DetectorSpec;

const DEFAULT_TREES: usize = 100;
const DEFAULT_SUBSAMPLE: usize = 256;
const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct IsolationForest {
    trees: Vec<Node>,
    normalizer: f64,
}

/// Average unsuccessful-search path length in a BST of m nodes.
fn average_path_length(m: usize) -> f64 {
    match m {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let h = ((m - 1) as f64).ln() + EULER_MASCHERONI;
            2.0 * h - 2.0 * (m - 1) as f64 / m as f64
        }
    }
}

fn build_tree(
    x: &Array2<f64>,
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Node {
    if rows.len() <= 1 || depth >= max_depth {
        return Node::Leaf { size: rows.len() };
    }
    // features with spread in this node
    let d = x.ncols();
    let usable: Vec<usize> = (0..d)
        .filter(|&j| {
            let first = x[[rows[0], j]];
            rows.iter().any(|&r| x[[r, j]] != first)
        })
        .collect();
    if usable.is_empty() {
        return Node::Leaf { size: rows.len() };
    }
    let feature = usable[rng.gen_range(0..usable.len())];
    let (min, max) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
        let v = x[[r, feature]];
        (lo.min(v), hi.max(v))
    });
    let threshold = rng.gen_range(min..max);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x[[r, feature]] < threshold);
    Node::Split {
        feature,
        threshold,
        left: Box::new(build_tree(x, &left_rows, depth + 1, max_depth, rng)),
        right: Box::new(build_tree(x, &right_rows, depth + 1, max_depth, rng)),
    }
}

fn path_length(node: &Node, row: ndarray::ArrayView1<f64>, depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + average_path_length(*size),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if row[*feature] < *threshold {
                path_length(left, row, depth + 1)
            } else {
                path_length(right, row, depth + 1)
            }
        }
    }
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<IsolationForest> {
    let n_trees = spec.int_param("trees", DEFAULT_TREES);
    let subsample = spec.int_param("subsample", DEFAULT_SUBSAMPLE).min(x.nrows());
    let max_depth = (subsample as f64).log2().ceil().max(1.0) as usize;
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = rng_from(derive_seed(spec.seed, &format!("iforest/tree/{t}")));
            // seeded subsample without replacement
            let mut pool: Vec<usize> = (0..x.nrows()).collect();
            for i in 0..subsample {
                let j = rng.gen_range(i..pool.len());
                pool.swap(i, j);
            }
            build_tree(x, &pool[..subsample], 0, max_depth, &mut rng)
        })
        .collect();
    Ok(IsolationForest {
        trees,
        normalizer: average_path_length(subsample),
    })
}

pub(crate) fn score(model: &IsolationForest, x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| {
            let mean_path: f64 = model
                .trees
                .iter()
                .map(|t| path_length(t, row, 0))
                .sum::<f64>()
                / model.trees.len() as f64;
            2f64.powf(-mean_path / model.normalizer.max(1e-12))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::zoo::Algorithm;

    #[test]
    fn identical_seed_gives_identical_scores() {
        let x = synth::standard_normal(300, 4, 9);
        let spec = DetectorSpec::new(Algorithm::IForest).with_seed(4);
        let a = score(&fit(&spec, &x).unwrap(), &x);
        let b = score(&fit(&spec, &x).unwrap(), &x);
        assert_eq!(a, b);
        let c = score(&fit(&spec.clone().with_seed(5), &x).unwrap(), &x);
        assert_ne!(a, c);
    }

    #[test]
    fn scores_lie_in_unit_interval() {
        let x = synth::standard_normal(200, 5, 2);
        let model = fit(&DetectorSpec::new(Algorithm::IForest).with_seed(1), &x).unwrap();
        for s in score(&model, &x) {
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn isolated_point_scores_highest() {
        let mut x = synth::standard_normal(256, 3, 6);
        x[[0, 1]] += 30.0;
        let model = fit(&DetectorSpec::new(Algorithm::IForest).with_seed(2), &x).unwrap();
        let scores = score(&model, &x);
        let argmax = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 0);
    }
}
