//! Cross-dataset transformation model.
//!
//! Two datasets with different feature counts share one network: each side
//! owns an encoder/decoder pair and both sides pass through a shared stack
//! with a narrow bottleneck. Training alternates one batch from each side per
//! step pair (the shorter side cycles), updating only the active side's
//! encoder/decoder plus the shared stack. After training, private rows are
//! rendered in the public feature space by composing the private encoder, the
//! shared stack, and the public decoder ("crossover" samples).
//!
//! Under the default widths the private path is
//! `d_prv -> 128 -> 64 -> 32 -> 64 -> 128 -> d_prv`, with the `64 -> 32 -> 64`
//! middle shared between both sides.
//!
//! A transformation counts as successful when the crossover rows are closer
//! to the private dataset than the public dataset itself is, measured by the
//! curve-difference metric [`ds_diff`] (strict inequality).

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{minibatches, TabularDataset};
use crate::error::{Error, Result};
use crate::mlp::{
    reconstruction_loss_and_grads, AdamParams, BlockAdamState, BlockGrads, MlpBlock,
};
use crate::seed::{derive_seed, rng_from};
use crate::similarity::{reconstruction_curve, sad};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Training/architecture configuration. Width lists describe the layer chain
/// of each piece: encoders map `d -> enc_widths...`, the shared stack runs
/// through `shared_widths` (first and last entries must match the encoder
/// output and decoder input), decoders map `dec_widths... -> d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscoderConfig {
    pub enc_widths: Vec<usize>,
    pub shared_widths: Vec<usize>,
    pub dec_widths: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub leaky_slope: f64,
    pub seed: u64,
}

impl Default for TranscoderConfig {
    fn default() -> Self {
        TranscoderConfig {
            enc_widths: vec![128, 64],
            shared_widths: vec![64, 32, 64],
            dec_widths: vec![64, 128],
            epochs: 1000,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            batch_size: 256,
            leaky_slope: 0.01,
            seed: 0,
        }
    }
}

impl TranscoderConfig {
    pub fn validate(&self) -> Result<()> {
        let all_widths = self
            .enc_widths
            .iter()
            .chain(&self.shared_widths)
            .chain(&self.dec_widths);
        for &w in all_widths {
            if w == 0 {
                return Err(Error::InvalidArgument("layer widths must be positive".into()));
            }
        }
        if self.enc_widths.is_empty() || self.shared_widths.len() < 2 || self.dec_widths.is_empty()
        {
            return Err(Error::InvalidArgument(
                "encoder/decoder need at least one width, shared stack at least two".into(),
            ));
        }
        if self.enc_widths.last() != self.shared_widths.first() {
            return Err(Error::InvalidArgument(
                "encoder output width must match the shared stack input".into(),
            ));
        }
        if self.shared_widths.last() != self.dec_widths.first() {
            return Err(Error::InvalidArgument(
                "shared stack output width must match the decoder input".into(),
            ));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1)")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
        }
    }
}

/// Which dataset a batch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Private,
    Public,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Private => "private",
            Side::Public => "public",
        }
    }
}

/// The five blocks of the transformation model.
#[derive(Debug, Clone)]
pub struct TranscoderModel {
    pub enc_prv: MlpBlock,
    pub enc_pub: MlpBlock,
    pub shared: MlpBlock,
    pub dec_prv: MlpBlock,
    pub dec_pub: MlpBlock,
    pub d_prv: usize,
    pub d_pub: usize,
    pub config: TranscoderConfig,
}

/// Per-block Adam accumulators. The shared stack sits on both paths and
/// therefore advances every step; side blocks advance only on their side's
/// batches.
#[derive(Debug, Clone)]
pub struct TranscoderAdam {
    pub enc_prv: BlockAdamState,
    pub enc_pub: BlockAdamState,
    pub shared: BlockAdamState,
    pub dec_prv: BlockAdamState,
    pub dec_pub: BlockAdamState,
}

impl TranscoderAdam {
    pub fn new(model: &TranscoderModel) -> Self {
        TranscoderAdam {
            enc_prv: BlockAdamState::new(&model.enc_prv),
            enc_pub: BlockAdamState::new(&model.enc_pub),
            shared: BlockAdamState::new(&model.shared),
            dec_prv: BlockAdamState::new(&model.dec_prv),
            dec_pub: BlockAdamState::new(&model.dec_pub),
        }
    }
}

/// Build a seeded model: weights uniform in ±1/sqrt(fan_in), biases zero.
pub fn init_transcoder(
    config: &TranscoderConfig,
    d_prv: usize,
    d_pub: usize,
    seed: u64,
) -> Result<TranscoderModel> {
    config.validate()?;
    if d_prv == 0 || d_pub == 0 {
        return Err(Error::InvalidArgument("feature counts must be >= 1".into()));
    }
    let slope = config.leaky_slope;
    let chain = |prefix: &[usize], widths: &[usize], suffix: &[usize]| -> Vec<usize> {
        prefix.iter().chain(widths).chain(suffix).copied().collect()
    };
    let mut rng = rng_from(seed);
    let enc_prv = MlpBlock::init(&chain(&[d_prv], &config.enc_widths, &[]), false, slope, &mut rng);
    let enc_pub = MlpBlock::init(&chain(&[d_pub], &config.enc_widths, &[]), false, slope, &mut rng);
    let shared = MlpBlock::init(&config.shared_widths, false, slope, &mut rng);
    let dec_prv = MlpBlock::init(&chain(&[], &config.dec_widths, &[d_prv]), true, slope, &mut rng);
    let dec_pub = MlpBlock::init(&chain(&[], &config.dec_widths, &[d_pub]), true, slope, &mut rng);
    Ok(TranscoderModel {
        enc_prv,
        enc_pub,
        shared,
        dec_prv,
        dec_pub,
        d_prv,
        d_pub,
        config: config.clone(),
    })
}

impl TranscoderModel {
    fn side_width(&self, side: Side) -> usize {
        match side {
            Side::Private => self.d_prv,
            Side::Public => self.d_pub,
        }
    }

    fn check_width(&self, batch: &Array2<f64>, side: Side) -> Result<()> {
        if batch.ncols() != self.side_width(side) {
            return Err(Error::DimensionMismatch {
                expected: self.side_width(side),
                actual: batch.ncols(),
            });
        }
        Ok(())
    }
}

/// Reconstruct a batch through its own side: encoder, shared stack, decoder.
pub fn reconstruct(model: &TranscoderModel, batch: &Array2<f64>, side: Side) -> Result<Array2<f64>> {
    model.check_width(batch, side)?;
    let (enc, dec) = match side {
        Side::Private => (&model.enc_prv, &model.dec_prv),
        Side::Public => (&model.enc_pub, &model.dec_pub),
    };
    let h = enc.forward(batch)?;
    let h = model.shared.forward(&h)?;
    dec.forward(&h)
}

/// Render private rows in the public feature space: private encoder, shared
/// stack, public decoder. Output is row-aligned with the input.
pub fn crossover(model: &TranscoderModel, prv_rows: &Array2<f64>) -> Result<Array2<f64>> {
    model.check_width(prv_rows, Side::Private)?;
    let h = model.enc_prv.forward(prv_rows)?;
    let h = model.shared.forward(&h)?;
    model.dec_pub.forward(&h)
}

/// One optimizer step on one side's batch. The loss is the per-sample mean of
/// the summed squared feature errors; only the active side's encoder/decoder
/// and the shared stack are updated.
pub fn train_step(
    model: &mut TranscoderModel,
    batch: &Array2<f64>,
    side: Side,
    adam: &mut TranscoderAdam,
) -> Result<f64> {
    model.check_width(batch, side)?;
    let params = model.config.adam();
    let (loss, grads) = {
        let (enc, dec) = match side {
            Side::Private => (&model.enc_prv, &model.dec_prv),
            Side::Public => (&model.enc_pub, &model.dec_pub),
        };
        reconstruction_loss_and_grads(&[enc, &model.shared, dec], batch)?
    };
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let [g_enc, g_shared, g_dec]: [BlockGrads; 3] = grads.try_into().expect("three blocks");
    match side {
        Side::Private => {
            adam.enc_prv.apply(&mut model.enc_prv, &g_enc, &params);
            adam.dec_prv.apply(&mut model.dec_prv, &g_dec, &params);
        }
        Side::Public => {
            adam.enc_pub.apply(&mut model.enc_pub, &g_enc, &params);
            adam.dec_pub.apply(&mut model.dec_pub, &g_dec, &params);
        }
    }
    adam.shared.apply(&mut model.shared, &g_shared, &params);
    Ok(loss)
}

/// Mean reconstruction loss of one epoch, per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub private_loss: f64,
    pub public_loss: f64,
}

/// Train on both datasets, one private batch then one public batch per step
/// pair until both epochs' batch lists are exhausted (the shorter side
/// cycles). Deterministic given the config seed; a non-finite loss aborts
/// with the offending epoch.
pub fn train(
    model: &mut TranscoderModel,
    private: &TabularDataset,
    public: &TabularDataset,
) -> Result<Vec<EpochLoss>> {
    model.check_width(&private.x, Side::Private)?;
    model.check_width(&public.x, Side::Public)?;
    let config = model.config.clone();
    let mut adam = TranscoderAdam::new(model);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let prv_batches = minibatches(
            private,
            config.batch_size,
            derive_seed(config.seed, &format!("batches/private/{epoch}")),
        )?;
        let pub_batches = minibatches(
            public,
            config.batch_size,
            derive_seed(config.seed, &format!("batches/public/{epoch}")),
        )?;
        let pairs = prv_batches.len().max(pub_batches.len());
        let mut prv_sum = 0.0;
        let mut pub_sum = 0.0;
        for i in 0..pairs {
            let step = |m: &mut TranscoderModel, a: &mut TranscoderAdam, b, side| {
                train_step(m, b, side, a).map_err(|e| match e {
                    Error::NonFiniteLoss => Error::Divergence { epoch },
                    other => other,
                })
            };
            prv_sum += step(
                model,
                &mut adam,
                &prv_batches[i % prv_batches.len()],
                Side::Private,
            )?;
            pub_sum += step(
                model,
                &mut adam,
                &pub_batches[i % pub_batches.len()],
                Side::Public,
            )?;
        }
        history.push(EpochLoss {
            epoch,
            private_loss: prv_sum / pairs as f64,
            public_loss: pub_sum / pairs as f64,
        });
    }
    Ok(history)
}

/// "epoch,side,loss" rows.
pub fn loss_history_csv(history: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,side,loss\n");
    for h in history {
        out.push_str(&format!("{},private,{}\n", h.epoch, h.private_loss));
        out.push_str(&format!("{},public,{}\n", h.epoch, h.public_loss));
    }
    out
}

/// Dataset-difference metric: the sum of absolute differences between the
/// two datasets' reconstruction curves. Dimension-independent, symmetric,
/// zero for identical datasets.
pub fn ds_diff(a: &TabularDataset, b: &TabularDataset) -> Result<f64> {
    Ok(sad(&reconstruction_curve(a)?, &reconstruction_curve(b)?))
}

/// A transformation succeeded when the crossover rows sit strictly closer to
/// the private dataset than the public dataset does.
pub fn transformation_success(
    private: &TabularDataset,
    public: &TabularDataset,
    crossover_rows: &TabularDataset,
) -> Result<bool> {
    Ok(ds_diff(private, public)? > ds_diff(private, crossover_rows)?)
}

// ---------------------------------------------------------------------------
// Serialization: versioned JSON of layer shapes plus base64 little-endian f64
// parameter buffers.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BlockFile {
    widths: Vec<usize>,
    weights_b64: Vec<String>,
    biases_b64: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    config: TranscoderConfig,
    d_prv: usize,
    d_pub: usize,
    /// enc_prv, enc_pub, shared, dec_prv, dec_pub — in this order.
    blocks: Vec<BlockFile>,
}

fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_f64s(text: &str, expected: usize, context: &str) -> Result<Vec<f64>> {
    let bytes = BASE64
        .decode(text)
        .map_err(|e| Error::schema(context, format!("bad base64: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::schema(
            context,
            format!("expected {expected} f64 values, found {} bytes", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn block_to_file(block: &MlpBlock) -> BlockFile {
    BlockFile {
        widths: block.widths(),
        weights_b64: block
            .layers
            .iter()
            .map(|l| encode_f64s(l.w.as_slice().expect("standard layout")))
            .collect(),
        biases_b64: block
            .layers
            .iter()
            .map(|l| encode_f64s(l.b.as_slice().expect("standard layout")))
            .collect(),
    }
}

fn block_from_file(
    file: &BlockFile,
    linear_output: bool,
    leaky_slope: f64,
    context: &str,
) -> Result<MlpBlock> {
    if file.widths.len() < 2
        || file.weights_b64.len() != file.widths.len() - 1
        || file.biases_b64.len() != file.widths.len() - 1
    {
        return Err(Error::schema(context, "inconsistent block layout"));
    }
    let mut layers = Vec::new();
    for (i, pair) in file.widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let w = decode_f64s(&file.weights_b64[i], fan_in * fan_out, context)?;
        let b = decode_f64s(&file.biases_b64[i], fan_out, context)?;
        layers.push(crate::mlp::Layer {
            w: Array2::from_shape_vec((fan_out, fan_in), w)
                .map_err(|e| Error::schema(context, e.to_string()))?,
            b: Array1::from_vec(b),
        });
    }
    Ok(MlpBlock {
        layers,
        linear_output,
        leaky_slope,
    })
}

pub fn model_to_json(model: &TranscoderModel) -> String {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        config: model.config.clone(),
        d_prv: model.d_prv,
        d_pub: model.d_pub,
        blocks: vec![
            block_to_file(&model.enc_prv),
            block_to_file(&model.enc_pub),
            block_to_file(&model.shared),
            block_to_file(&model.dec_prv),
            block_to_file(&model.dec_pub),
        ],
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str, context: &str) -> Result<TranscoderModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::schema(context, e.to_string()))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::schema(
            context,
            format!("unsupported schema_version {}", file.schema_version),
        ));
    }
    if file.blocks.len() != 5 {
        return Err(Error::schema(context, "expected five blocks"));
    }
    let slope = file.config.leaky_slope;
    let model = TranscoderModel {
        enc_prv: block_from_file(&file.blocks[0], false, slope, context)?,
        enc_pub: block_from_file(&file.blocks[1], false, slope, context)?,
        shared: block_from_file(&file.blocks[2], false, slope, context)?,
        dec_prv: block_from_file(&file.blocks[3], true, slope, context)?,
        dec_pub: block_from_file(&file.blocks[4], true, slope, context)?,
        d_prv: file.d_prv,
        d_pub: file.d_pub,
        config: file.config,
    };
    if model.enc_prv.input_width() != model.d_prv
        || model.dec_pub.output_width() != model.d_pub
        || model.enc_pub.input_width() != model.d_pub
        || model.dec_prv.output_width() != model.d_prv
    {
        return Err(Error::schema(context, "block widths do not match d_prv/d_pub"));
    }
    Ok(model)
}

pub fn save_model(model: &TranscoderModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<TranscoderModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    model_from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::normalize;
    use crate::synth;

    fn quick_config(epochs: usize, seed: u64) -> TranscoderConfig {
        TranscoderConfig {
            epochs,
            seed,
            ..TranscoderConfig::default()
        }
    }

    #[test]
    fn init_block_shapes_follow_architecture() {
        let model = init_transcoder(&TranscoderConfig::default(), 9, 27, 1).unwrap();
        assert_eq!(model.enc_prv.layers[0].w.shape(), &[128, 9]);
        assert_eq!(model.enc_prv.layers[1].w.shape(), &[64, 128]);
        assert_eq!(model.shared.widths(), vec![64, 32, 64]);
        assert_eq!(model.dec_pub.layers[0].w.shape(), &[128, 64]);
        assert_eq!(model.dec_pub.layers.last().unwrap().w.shape(), &[27, 128]);
        assert_eq!(model.dec_prv.layers.last().unwrap().w.shape(), &[9, 128]);
        let all_bias_zero = [
            &model.enc_prv,
            &model.enc_pub,
            &model.shared,
            &model.dec_prv,
            &model.dec_pub,
        ]
        .iter()
        .all(|b| b.layers.iter().all(|l| l.b.iter().all(|&v| v == 0.0)));
        assert!(all_bias_zero);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_transcoder(&TranscoderConfig::default(), 5, 7, 42).unwrap();
        let b = init_transcoder(&TranscoderConfig::default(), 5, 7, 42).unwrap();
        assert_eq!(a.enc_prv.layers[0].w, b.enc_prv.layers[0].w);
        assert_eq!(a.dec_pub.layers[1].w, b.dec_pub.layers[1].w);
        assert_eq!(a.shared.layers[0].w, b.shared.layers[0].w);
    }

    #[test]
    fn reconstruct_preserves_shape_and_checks_width() {
        let model = init_transcoder(&TranscoderConfig::default(), 6, 9, 2).unwrap();
        let batch = synth::standard_normal(10, 6, 3);
        let out = reconstruct(&model, &batch, Side::Private).unwrap();
        assert_eq!(out.shape(), batch.shape());
        assert!(reconstruct(&model, &batch, Side::Public).is_err());
    }

    #[test]
    fn private_step_leaves_public_blocks_untouched() {
        let mut model = init_transcoder(&quick_config(1, 5), 6, 9, 5).unwrap();
        let enc_pub_before = model.enc_pub.clone();
        let dec_pub_before = model.dec_pub.clone();
        let shared_before = model.shared.clone();
        let mut adam = TranscoderAdam::new(&model);
        let batch = synth::standard_normal(8, 6, 6);
        train_step(&mut model, &batch, Side::Private, &mut adam).unwrap();
        for (a, b) in model.enc_pub.layers.iter().zip(enc_pub_before.layers.iter()) {
            assert_eq!(a.w, b.w);
            assert_eq!(a.b, b.b);
        }
        for (a, b) in model.dec_pub.layers.iter().zip(dec_pub_before.layers.iter()) {
            assert_eq!(a.w, b.w);
        }
        // the shared stack is on the active path and must move
        assert_ne!(model.shared.layers[0].w, shared_before.layers[0].w);
    }

    #[test]
    fn crossover_shape_contract() {
        let model = init_transcoder(&TranscoderConfig::default(), 5, 11, 7).unwrap();
        let rows = synth::standard_normal(13, 5, 8);
        let co = crossover(&model, &rows).unwrap();
        assert_eq!(co.shape(), &[13, 11]);
        assert!(crossover(&model, &synth::standard_normal(4, 11, 9)).is_err());
    }

    #[test]
    fn crossover_of_zero_through_zero_weights_is_bias_composition() {
        let mut model = init_transcoder(&TranscoderConfig::default(), 4, 6, 3).unwrap();
        for block in [
            &mut model.enc_prv,
            &mut model.shared,
            &mut model.dec_pub,
        ] {
            for layer in &mut block.layers {
                layer.w.fill(0.0);
                layer.b.fill(0.0);
            }
        }
        model.dec_pub.layers.last_mut().unwrap().b.fill(0.25);
        let co = crossover(&model, &Array2::zeros((3, 4))).unwrap();
        assert!(co.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn zero_epochs_returns_initialized_model_unchanged() {
        let prv = TabularDataset::new("p", synth::standard_normal(20, 4, 1), None, None).unwrap();
        let pub_ = TabularDataset::new("q", synth::standard_normal(25, 6, 2), None, None).unwrap();
        let mut model = init_transcoder(&quick_config(0, 3), 4, 6, 3).unwrap();
        let before = model.enc_prv.layers[0].w.clone();
        let history = train(&mut model, &prv, &pub_).unwrap();
        assert!(history.is_empty());
        assert_eq!(model.enc_prv.layers[0].w, before);
    }

    #[test]
    fn training_is_seed_deterministic_and_loss_decreases() {
        let prv = TabularDataset::new(
            "p",
            synth::gaussian_factor(200, 6, 3, 0.2, 10),
            None,
            None,
        )
        .unwrap();
        let pub_ = TabularDataset::new(
            "q",
            synth::gaussian_factor(200, 9, 3, 0.2, 11),
            None,
            None,
        )
        .unwrap();
        let (_, prv_n) = normalize(&prv).unwrap();
        let (_, pub_n) = normalize(&pub_).unwrap();
        let run = |seed| {
            let mut model = init_transcoder(&quick_config(50, seed), 6, 9, seed).unwrap();
            let history = train(&mut model, &prv_n, &pub_n).unwrap();
            (model, history)
        };
        let (_, h1) = run(21);
        let (_, h2) = run(21);
        assert_eq!(h1, h2);
        assert!(h1[49].private_loss < h1[0].private_loss);
        assert!(h1[49].public_loss < h1[0].public_loss);
    }

    #[test]
    fn crossover_preserves_row_outlyingness() {
        // the property soft labeling rests on: a detector fitted on the
        // public twin still separates the private outliers when applied to
        // the row-aligned crossover rendering
        let prv = synth::planted_outliers("p", 250, 12, 8, 3, 0.25, 8.0, 40);
        let twin = synth::planted_outliers("t", 250, 12, 8, 3, 0.25, 8.0, 41);
        let (_, prv_n) = normalize(&prv).unwrap();
        let (_, twin_n) = normalize(&twin).unwrap();
        let truth = prv_n.labels.clone().unwrap();
        let mut model = init_transcoder(&quick_config(120, 42), 8, 8, 42).unwrap();
        train(&mut model, &prv_n, &twin_n).unwrap();
        let co = crossover(&model, &prv_n.x).unwrap();
        let det = crate::zoo::fit(
            &crate::zoo::DetectorSpec::new(crate::zoo::Algorithm::Knn).with("k", 5.0),
            &twin_n.x,
        )
        .unwrap();
        let scores = crate::zoo::score(&det, &co).unwrap();
        let auc = crate::eval::roc_auc(&scores, &truth).unwrap();
        assert!(auc > 0.9, "detector auc on crossover rows was {auc}");
    }

    #[test]
    fn ds_diff_axioms() {
        let a = TabularDataset::new("a", synth::equicorrelated(80, 5, 0.7, 1), None, None).unwrap();
        let b = TabularDataset::new("b", synth::equicorrelated(80, 5, 0.2, 2), None, None).unwrap();
        assert_eq!(ds_diff(&a, &a).unwrap(), 0.0);
        let ab = ds_diff(&a, &b).unwrap();
        let ba = ds_diff(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab > 0.0);
    }

    #[test]
    fn ds_diff_grows_with_spectrum_mismatch() {
        let base = TabularDataset::new("r", synth::equicorrelated(300, 6, 0.8, 5), None, None)
            .unwrap();
        let diffs: Vec<f64> = [0.6, 0.4, 0.2]
            .iter()
            .map(|&rho| {
                let other = TabularDataset::new(
                    "o",
                    synth::equicorrelated(300, 6, rho, 6),
                    None,
                    None,
                )
                .unwrap();
                ds_diff(&base, &other).unwrap()
            })
            .collect();
        assert!(diffs[0] < diffs[1] && diffs[1] < diffs[2], "{diffs:?}");
    }

    #[test]
    fn success_requires_strict_improvement() {
        let prv = TabularDataset::new("p", synth::equicorrelated(60, 4, 0.6, 7), None, None)
            .unwrap();
        let pub_ = TabularDataset::new("q", synth::equicorrelated(60, 4, 0.1, 8), None, None)
            .unwrap();
        // crossover equal to the private dataset: maximal improvement
        let co_like_prv = prv.with_matrix(prv.x.clone()).unwrap();
        assert!(transformation_success(&prv, &pub_, &co_like_prv).unwrap());
        // crossover equal to the public dataset: equality is not success
        let co_like_pub = pub_.with_matrix(pub_.x.clone()).unwrap();
        assert!(!transformation_success(&prv, &pub_, &co_like_pub).unwrap());
        // public identical to private: strict inequality is impossible
        let pub_copy = prv.with_matrix(prv.x.clone()).unwrap();
        assert!(!transformation_success(&prv, &pub_copy, &co_like_prv).unwrap());
    }

    #[test]
    fn model_json_round_trip() {
        let prv = TabularDataset::new("p", synth::standard_normal(30, 4, 1), None, None).unwrap();
        let pub_ = TabularDataset::new("q", synth::standard_normal(30, 7, 2), None, None).unwrap();
        let mut model = init_transcoder(&quick_config(3, 9), 4, 7, 9).unwrap();
        train(&mut model, &prv, &pub_).unwrap();
        let json = model_to_json(&model);
        let back = model_from_json(&json, "test").unwrap();
        assert_eq!(back.d_prv, 4);
        assert_eq!(back.d_pub, 7);
        let rows = synth::standard_normal(5, 4, 3);
        assert_eq!(
            crossover(&model, &rows).unwrap(),
            crossover(&back, &rows).unwrap()
        );
    }

    #[test]
    fn loss_history_csv_format() {
        let history = vec![EpochLoss {
            epoch: 0,
            private_loss: 1.5,
            public_loss: 2.5,
        }];
        let csv = loss_history_csv(&history);
        assert_eq!(csv, "epoch,side,loss\n0,private,1.5\n0,public,2.5\n");
    }
}
