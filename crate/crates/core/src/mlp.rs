//! Small dense-network machinery: stacked linear layers with a leaky
//! rectifier, reverse-mode gradients, and Adam parameter updates. Everything
//! works on f64 batches and is fully deterministic given a seed.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One dense layer: `y = x Wᵀ + b` with `w` shaped `[out x in]`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// A stack of dense layers. The leaky rectifier is applied after every layer;
/// blocks with `linear_output` skip it on the last layer (decoder outputs are
/// unbounded because inputs are z-scored).
#[derive(Debug, Clone)]
pub struct MlpBlock {
    pub layers: Vec<Layer>,
    pub linear_output: bool,
    pub leaky_slope: f64,
}

impl MlpBlock {
    /// Initialize from a width chain `[in, h1, ..., out]`: weights uniform in
    /// ±1/sqrt(fan_in), biases zero.
    pub fn init(widths: &[usize], linear_output: bool, leaky_slope: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(widths.len() >= 2, "a block needs at least one layer");
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                    rng.gen_range(-bound..bound)
                });
                Layer {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        MlpBlock {
            layers,
            linear_output,
            leaky_slope,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().expect("non-empty block").w.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty block").w.nrows()
    }

    /// Width chain `[in, h1, ..., out]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_width()];
        w.extend(self.layers.iter().map(|l| l.w.nrows()));
        w
    }

    fn activated(&self, layer_idx: usize) -> bool {
        !(self.linear_output && layer_idx + 1 == self.layers.len())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.w.t()) + layer.b.view().insert_axis(Axis(0));
            if self.activated(i) {
                h.mapv_inplace(|z| leaky(z, self.leaky_slope));
            }
        }
        Ok(h)
    }

    /// Forward pass keeping layer inputs and pre-activations for the backward
    /// pass.
    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, BlockCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            let z = h.dot(&layer.w.t()) + layer.b.view().insert_axis(Axis(0));
            preacts.push(z.clone());
            h = if self.activated(i) {
                z.mapv(|v| leaky(v, self.leaky_slope))
            } else {
                z
            };
        }
        Ok((h, BlockCache { inputs, preacts }))
    }

    /// Back-propagate `grad_out` (dL/d output) through the block. Returns
    /// per-layer parameter gradients and dL/d input.
    pub fn backward(&self, cache: &BlockCache, grad_out: &Array2<f64>) -> (BlockGrads, Array2<f64>) {
        let mut grad = grad_out.clone();
        let mut layers = vec![
            LayerGrads {
                w: Array2::zeros((0, 0)),
                b: Array1::zeros(0),
            };
            self.layers.len()
        ];
        for i in (0..self.layers.len()).rev() {
            let dz = if self.activated(i) {
                let slope = self.leaky_slope;
                let mut dz = grad;
                dz.zip_mut_with(&cache.preacts[i], |g, &z| {
                    if z <= 0.0 {
                        *g *= slope;
                    }
                });
                dz
            } else {
                grad
            };
            layers[i] = LayerGrads {
                w: dz.t().dot(&cache.inputs[i]),
                b: dz.sum_axis(Axis(0)),
            };
            grad = dz.dot(&self.layers[i].w);
        }
        (BlockGrads { layers }, grad)
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }
}

fn leaky(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        slope * z
    }
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    inputs: Vec<Array2<f64>>,
    preacts: Vec<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct BlockGrads {
    pub layers: Vec<LayerGrads>,
}

/// Forward through a chain of blocks.
pub fn forward_chain(blocks: &[&MlpBlock], x: &Array2<f64>) -> Result<Array2<f64>> {
    let mut h = x.clone();
    for block in blocks {
        h = block.forward(&h)?;
    }
    Ok(h)
}

/// Reconstruction loss and gradients through a block chain: the loss is the
/// per-sample mean of the summed squared feature errors against the input
/// batch itself.
pub fn reconstruction_loss_and_grads(
    blocks: &[&MlpBlock],
    batch: &Array2<f64>,
) -> Result<(f64, Vec<BlockGrads>)> {
    let n = batch.nrows() as f64;
    let mut caches = Vec::with_capacity(blocks.len());
    let mut h = batch.clone();
    for block in blocks {
        let (out, cache) = block.forward_cached(&h)?;
        caches.push(cache);
        h = out;
    }
    let resid = &h - batch;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;
    let mut grad = resid.mapv(|r| 2.0 * r / n);
    let mut grads: Vec<Option<BlockGrads>> = (0..blocks.len()).map(|_| None).collect();
    for i in (0..blocks.len()).rev() {
        let (bg, gin) = blocks[i].backward(&caches[i], &grad);
        grads[i] = Some(bg);
        grad = gin;
    }
    Ok((loss, grads.into_iter().map(|g| g.expect("filled")).collect()))
}

/// Plain reconstruction loss (forward only), used by finite-difference checks.
pub fn reconstruction_loss(blocks: &[&MlpBlock], batch: &Array2<f64>) -> Result<f64> {
    let out = forward_chain(blocks, batch)?;
    let n = batch.nrows() as f64;
    Ok(out
        .iter()
        .zip(batch.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// First/second-moment accumulators mirroring one block's parameters, plus
/// the step counter used for bias correction. Counters advance only when the
/// block actually receives gradients.
#[derive(Debug, Clone)]
pub struct BlockAdamState {
    m: Vec<LayerGrads>,
    v: Vec<LayerGrads>,
    pub t: u64,
}

impl BlockAdamState {
    pub fn new(block: &MlpBlock) -> Self {
        let zeros = |l: &Layer| LayerGrads {
            w: Array2::zeros(l.w.raw_dim()),
            b: Array1::zeros(l.b.raw_dim()),
        };
        BlockAdamState {
            m: block.layers.iter().map(zeros).collect(),
            v: block.layers.iter().map(zeros).collect(),
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `block` from `grads`.
    pub fn apply(&mut self, block: &mut MlpBlock, grads: &BlockGrads, params: &AdamParams) {
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - params.beta1.powf(t);
        let bc2 = 1.0 - params.beta2.powf(t);
        for (i, layer) in block.layers.iter_mut().enumerate() {
            update_tensor(
                &mut layer.w,
                &grads.layers[i].w,
                &mut self.m[i].w,
                &mut self.v[i].w,
                params,
                bc1,
                bc2,
            );
            update_vector(
                &mut layer.b,
                &grads.layers[i].b,
                &mut self.m[i].b,
                &mut self.v[i].b,
                params,
                bc1,
                bc2,
            );
        }
    }
}

fn update_tensor(
    p: &mut Array2<f64>,
    g: &Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    params: &AdamParams,
    bc1: f64,
    bc2: f64,
) {
    azip_update(
        p.iter_mut().zip(g.iter()).zip(m.iter_mut().zip(v.iter_mut())),
        params,
        bc1,
        bc2,
    );
}

fn update_vector(
    p: &mut Array1<f64>,
    g: &Array1<f64>,
    m: &mut Array1<f64>,
    v: &mut Array1<f64>,
    params: &AdamParams,
    bc1: f64,
    bc2: f64,
) {
    azip_update(
        p.iter_mut().zip(g.iter()).zip(m.iter_mut().zip(v.iter_mut())),
        params,
        bc1,
        bc2,
    );
}

fn azip_update<'a, I>(iter: I, params: &AdamParams, bc1: f64, bc2: f64)
where
    I: Iterator<Item = ((&'a mut f64, &'a f64), (&'a mut f64, &'a mut f64))>,
{
    for ((p, &g), (m, v)) in iter {
        *m = params.beta1 * *m + (1.0 - params.beta1) * g;
        *v = params.beta2 * *v + (1.0 - params.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= params.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use ndarray::array;

    fn small_block(widths: &[usize], linear_output: bool, seed: u64) -> MlpBlock {
        MlpBlock::init(widths, linear_output, 0.01, &mut rng_from(seed))
    }

    #[test]
    fn init_shapes_and_zero_biases() {
        let block = small_block(&[3, 5, 2], true, 1);
        assert_eq!(block.layers[0].w.shape(), &[5, 3]);
        assert_eq!(block.layers[1].w.shape(), &[2, 5]);
        assert!(block.layers.iter().all(|l| l.b.iter().all(|&b| b == 0.0)));
        assert_eq!(block.widths(), vec![3, 5, 2]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = small_block(&[4, 6, 4], false, 9);
        let b = small_block(&[4, 6, 4], false, 9);
        assert_eq!(a.layers[0].w, b.layers[0].w);
        assert_eq!(a.layers[1].w, b.layers[1].w);
    }

    #[test]
    fn rows_are_independent() {
        let block = small_block(&[3, 4, 3], true, 2);
        let batch = array![[0.3, -1.0, 2.0], [1.5, 0.2, -0.7]];
        let both = block.forward(&batch).unwrap();
        for i in 0..2 {
            let single = block
                .forward(&batch.select(Axis(0), &[i]))
                .unwrap();
            for j in 0..3 {
                assert!((both[[i, j]] - single[[0, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_weight_block_outputs_bias() {
        let mut block = small_block(&[2, 2], true, 3);
        block.layers[0].w.fill(0.0);
        block.layers[0].b.assign(&array![1.5, -2.0]);
        let out = block.forward(&array![[9.0, 9.0], [0.0, 0.0]]).unwrap();
        assert_eq!(out, array![[1.5, -2.0], [1.5, -2.0]]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        // central differences over every parameter of a two-block chain
        let enc = small_block(&[3, 5, 4], false, 10);
        let dec = small_block(&[4, 5, 3], true, 11);
        let batch = {
            let mut rng = rng_from(12);
            Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0))
        };
        let blocks = [&enc, &dec];
        let (_, grads) = reconstruction_loss_and_grads(&blocks, &batch).unwrap();

        let h = 1e-5;
        for (bi, block) in [enc.clone(), dec.clone()].into_iter().enumerate() {
            for li in 0..block.layers.len() {
                for idx in 0..block.layers[li].w.len() {
                    let numeric = {
                        let mut plus = block.clone();
                        let mut minus = block.clone();
                        plus.layers[li].w.as_slice_mut().unwrap()[idx] += h;
                        minus.layers[li].w.as_slice_mut().unwrap()[idx] -= h;
                        let (lp, lm) = if bi == 0 {
                            (
                                reconstruction_loss(&[&plus, &dec], &batch).unwrap(),
                                reconstruction_loss(&[&minus, &dec], &batch).unwrap(),
                            )
                        } else {
                            (
                                reconstruction_loss(&[&enc, &plus], &batch).unwrap(),
                                reconstruction_loss(&[&enc, &minus], &batch).unwrap(),
                            )
                        };
                        (lp - lm) / (2.0 * h)
                    };
                    let analytic = grads[bi].layers[li].w.as_slice().unwrap()[idx];
                    let rel = (analytic - numeric).abs()
                        / analytic.abs().max(numeric.abs()).max(1e-4);
                    assert!(
                        rel < 1e-4,
                        "block {bi} layer {li} w[{idx}]: analytic {analytic}, numeric {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn adam_leaves_params_unchanged_on_zero_gradient() {
        let mut block = small_block(&[3, 4, 3], true, 5);
        let before = block.clone();
        let mut state = BlockAdamState::new(&block);
        let zero = BlockGrads {
            layers: block
                .layers
                .iter()
                .map(|l| LayerGrads {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
        };
        let params = AdamParams {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
        };
        state.apply(&mut block, &zero, &params);
        for (a, b) in block.layers.iter().zip(before.layers.iter()) {
            assert_eq!(a.w, b.w);
            assert_eq!(a.b, b.b);
        }
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_reduces_reconstruction_loss() {
        let mut enc = small_block(&[4, 6, 3], false, 20);
        let mut dec = small_block(&[3, 6, 4], true, 21);
        let batch = {
            let mut rng = rng_from(22);
            Array2::from_shape_fn((16, 4), |_| rng.gen_range(-1.0..1.0))
        };
        let params = AdamParams {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
        };
        let mut enc_state = BlockAdamState::new(&enc);
        let mut dec_state = BlockAdamState::new(&dec);
        let (first, _) = reconstruction_loss_and_grads(&[&enc, &dec], &batch).unwrap();
        let mut last = first;
        for _ in 0..200 {
            let (loss, grads) = reconstruction_loss_and_grads(&[&enc, &dec], &batch).unwrap();
            enc_state.apply(&mut enc, &grads[0], &params);
            dec_state.apply(&mut dec, &grads[1], &params);
            last = loss;
        }
        assert!(last < first * 0.5, "loss {first} -> {last}");
    }
}
