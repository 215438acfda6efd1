//! Autoencoder reconstruction score for a single dataset, reusing the dense
//! network machinery: encoder d -> 128 -> 64, decoder 64 -> 128 -> d, trained
//! with Adam on seeded minibatches. The score is the per-sample squared
//! reconstruction error.

use ndarray::{Array2, Axis};

use crate::dataset::minibatch_indices;
use crate::error::{Error, Result};
use crate::mlp::{
    forward_chain, reconstruction_loss_and_grads, AdamParams, BlockAdamState, MlpBlock,
};
use crate::seed::{derive_seed, rng_from};

use super::DetectorSpec;

const DEFAULT_EPOCHS: usize = 100;
const ENC_WIDTHS: [usize; 2] = [128, 64];
const DEC_WIDTHS: [usize; 2] = [64, 128];
const BATCH_SIZE: usize = 256;
const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone)]
pub(crate) struct AeOdModel {
    enc: MlpBlock,
    dec: MlpBlock,
}

pub(crate) fn fit(spec: &DetectorSpec, x: &Array2<f64>) -> Result<AeOdModel> {
    let epochs = spec.int_param("epochs", DEFAULT_EPOCHS);
    let d = x.ncols();
    let mut rng = rng_from(derive_seed(spec.seed, "ae/init"));
    let enc_chain: Vec<usize> = std::iter::once(d).chain(ENC_WIDTHS).collect();
    let dec_chain: Vec<usize> = DEC_WIDTHS.iter().copied().chain(std::iter::once(d)).collect();
    let mut enc = MlpBlock::init(&enc_chain, false, LEAKY_SLOPE, &mut rng);
    let mut dec = MlpBlock::init(&dec_chain, true, LEAKY_SLOPE, &mut rng);

    let params = AdamParams {
        learning_rate: 0.001,
        beta1: 0.9,
        beta2: 0.999,
    };
    let mut enc_state = BlockAdamState::new(&enc);
    let mut dec_state = BlockAdamState::new(&dec);
    for epoch in 0..epochs {
        let batches = minibatch_indices(
            x.nrows(),
            BATCH_SIZE,
            derive_seed(spec.seed, &format!("ae/batches/{epoch}")),
        )?;
        for idxs in batches {
            let batch = x.select(Axis(0), &idxs);
            let (loss, grads) = reconstruction_loss_and_grads(&[&enc, &dec], &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            enc_state.apply(&mut enc, &grads[0], &params);
            dec_state.apply(&mut dec, &grads[1], &params);
        }
    }
    Ok(AeOdModel { enc, dec })
}

pub(crate) fn score(model: &AeOdModel, x: &Array2<f64>) -> Vec<f64> {
    let recon = forward_chain(&[&model.enc, &model.dec], x).expect("widths checked by caller");
    let resid = &recon - x;
    resid
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}
