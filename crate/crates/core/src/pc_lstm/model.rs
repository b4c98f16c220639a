//! Two-port pipeline: frozen Green network -> attention fusion -> physics-kernel
//! convolution -> row sequence -> stacked LSTM -> dense head (six reals).

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kernel::{build_kernel, PhysicsKernel};
use super::lstm::{lstm_backward, lstm_forward_batch, LstmLayer, LstmParams, LstmRecord};
use crate::error::{Error, Result};
use crate::fusion::{fuse, fusion_grads, FusionParams, FusionRecord};
use crate::geometry::ArrayGeometry;
use crate::linalg::CMatrix;
use crate::nn::{
    conv2d, conv2d_backward, cosine_learning_rate, Adam, AdamConfig, Checkpoint, DenseRecord,
    LayerRecord, ParamSlot, Tensor2, CHECKPOINT_SCHEMA_VERSION,
};
use crate::pann::{
    mirror_upper, pann_predict, train_pann, InputNormalization, PannConfig, PannInput, PannModel,
};
use crate::synthesis::Sample;

/// Output order: re/im of z11, z12, z22.
pub const TARGET_NAMES: [&str; 6] = ["z11_re", "z11_im", "z12_re", "z12_im", "z22_re", "z22_im"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoPortConfig {
    pub hidden: usize,
    pub lstm_layers: usize,
    pub kernel_side: usize,
    pub kernel_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Final learning rate as a fraction of the initial one.
    pub lr_floor: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub pann: PannConfig,
}

impl Default for TwoPortConfig {
    fn default() -> Self {
        TwoPortConfig {
            hidden: 64,
            lstm_layers: 4,
            kernel_side: 3,
            kernel_decay: 1.0,
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-3,
            lr_floor: 0.01,
            clip_norm: Some(5.0),
            holdout_fraction: 0.2,
            seed: 42,
            pann: PannConfig::default(),
        }
    }
}

/// Per-component z-score constants for the six targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetNormalization {
    pub mean: [f64; 6],
    pub std: [f64; 6],
}

impl TargetNormalization {
    pub fn fit(rows: &[[f64; 6]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("cannot normalize an empty target set"));
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; 6];
        let mut std = [0.0; 6];
        for j in 0..6 {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            std[j] = if var.sqrt() > 1e-12 * (1.0 + mean[j].abs()) {
                var.sqrt()
            } else {
                1.0
            };
        }
        Ok(TargetNormalization { mean, std })
    }

    pub fn normalize(&self, z: &[f64; 6]) -> [f64; 6] {
        std::array::from_fn(|j| (z[j] - self.mean[j]) / self.std[j])
    }

    pub fn denormalize(&self, y: &[f64]) -> [f64; 6] {
        std::array::from_fn(|j| y[j] * self.std[j] + self.mean[j])
    }
}

/// The six reals of a 2x2 port matrix, taken from its upper triangle.
pub fn target_vector(z: &CMatrix) -> Result<[f64; 6]> {
    if z.rows != 2 || z.cols != 2 {
        return Err(Error::shape(format!(
            "two-port target must be 2x2, got {}x{}",
            z.rows, z.cols
        )));
    }
    let (a, b, c) = (z[(0, 0)], z[(0, 1)], z[(1, 1)]);
    Ok([a.re, a.im, b.re, b.im, c.re, c.im])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPortMeta {
    pub input_normalization: InputNormalization,
    pub targets: TargetNormalization,
    /// Final normalized training loss.
    pub train_loss: f64,
}

/// Everything needed for inference, serialized as one checkpoint document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BundleFile", try_from = "BundleFile")]
pub struct ModelBundle {
    pub pann: PannModel,
    pub fusion: FusionParams,
    pub kernel: PhysicsKernel,
    pub lstm: LstmParams,
    pub meta: TwoPortMeta,
    pub seed: u64,
    pub optimizer: AdamConfig,
    pub epoch: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct BundleFile {
    #[serde(flatten)]
    checkpoint: Checkpoint,
    two_port: TwoPortMeta,
    kernel: PhysicsKernel,
    pann: PannModel,
}

fn lstm_record(name: String, layer: &LstmLayer) -> LayerRecord {
    LayerRecord {
        name,
        kind: "lstm".into(),
        shape: [layer.weights.rows, layer.weights.cols],
        activation: None,
        weights: layer.weights.data.clone(),
        bias: layer.bias.clone(),
    }
}

fn lstm_from_record(rec: &LayerRecord) -> Result<LstmLayer> {
    if rec.kind != "lstm" || rec.shape[0] % 4 != 0 {
        return Err(Error::Model(format!(
            "layer {} is not an LSTM layer",
            rec.name
        )));
    }
    let weights = rec.weight_tensor()?;
    let hidden = rec.shape[0] / 4;
    if rec.bias.len() != rec.shape[0] || weights.cols <= hidden {
        return Err(Error::Model(format!(
            "layer {} has inconsistent shapes",
            rec.name
        )));
    }
    Ok(LstmLayer {
        weights,
        bias: rec.bias.clone(),
        hidden,
    })
}

impl From<ModelBundle> for BundleFile {
    fn from(b: ModelBundle) -> Self {
        let mut layers = vec![
            LayerRecord::dense("fusion.map_r", &b.fusion.map_r),
            LayerRecord::dense("fusion.map_i", &b.fusion.map_i),
            LayerRecord::dense("fusion.attn", &b.fusion.attn),
        ];
        for (i, l) in b.lstm.layers.iter().enumerate() {
            layers.push(lstm_record(format!("lstm{i}"), l));
        }
        layers.push(LayerRecord::dense("head", &b.lstm.head));
        BundleFile {
            checkpoint: Checkpoint {
                schema_version: CHECKPOINT_SCHEMA_VERSION,
                seed: b.seed,
                layers,
                optimizer: b.optimizer,
                epoch: b.epoch,
                loss: b.meta.train_loss,
            },
            two_port: b.meta,
            kernel: b.kernel,
            pann: b.pann,
        }
    }
}

impl TryFrom<BundleFile> for ModelBundle {
    type Error = Error;

    fn try_from(f: BundleFile) -> Result<Self> {
        let ck = &f.checkpoint;
        ck.check_version()?;
        let fusion = FusionParams::new(
            ck.layer("fusion.map_r")?.to_dense()?,
            ck.layer("fusion.map_i")?.to_dense()?,
            ck.layer("fusion.attn")?.to_dense()?,
        )?;
        let layers = ck
            .layers
            .iter()
            .filter(|l| l.kind == "lstm")
            .map(lstm_from_record)
            .collect::<Result<Vec<_>>>()?;
        let lstm = LstmParams {
            layers,
            head: ck.layer("head")?.to_dense()?,
        };
        lstm.validate()?;
        let bundle = ModelBundle {
            pann: f.pann,
            fusion,
            kernel: f.kernel,
            lstm,
            meta: f.two_port,
            seed: ck.seed,
            optimizer: ck.optimizer,
            epoch: ck.epoch,
        };
        bundle.check_shapes()?;
        Ok(bundle)
    }
}

/// Number of scalar geometry features appended to every sequence element.
const SCALARS: usize = 4;

impl ModelBundle {
    /// Side of the Green grid (total segments of the two-element array).
    pub fn side(&self) -> usize {
        self.pann.side()
    }

    /// Rows (sequence length) and columns of each convolved map.
    pub fn conv_side(&self) -> usize {
        self.side() + 1 - self.kernel.side
    }

    pub fn sequence_width(&self) -> usize {
        3 * self.conv_side() + SCALARS
    }

    fn check_shapes(&self) -> Result<()> {
        if self.pann.meta.elements != 2 {
            return Err(Error::Model(
                "the two-port bundle needs a two-element Green network".into(),
            ));
        }
        if self.fusion.side() != self.side() {
            return Err(Error::Model(
                "fusion side does not match the Green grid".into(),
            ));
        }
        if self.kernel.side > self.side() {
            return Err(Error::Model("kernel larger than the Green grid".into()));
        }
        if self.lstm.inputs() != self.sequence_width() || self.lstm.head.outputs() != 6 {
            return Err(Error::Model(
                "LSTM widths do not match the feature layout".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the serialized bundle.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }

    pub fn is_trained(&self) -> bool {
        self.epoch > 0
    }

    fn parameter_slots<'a>(&'a mut self, g: &'a Gradients) -> Vec<ParamSlot<'a>> {
        let mut slots = Vec::new();
        let f = &mut self.fusion;
        for (name, layer, grad) in [
            ("fusion.map_r", &mut f.map_r, &g.fusion[0]),
            ("fusion.map_i", &mut f.map_i, &g.fusion[1]),
            ("fusion.attn", &mut f.attn, &g.fusion[2]),
        ] {
            slots.push(ParamSlot::new(
                format!("{name}.weights"),
                &mut layer.weights.data,
                &grad.0.data,
            ));
            slots.push(ParamSlot::new(
                format!("{name}.bias"),
                &mut layer.bias,
                &grad.1,
            ));
        }
        for (i, (layer, grad)) in self.lstm.layers.iter_mut().zip(&g.lstm).enumerate() {
            slots.push(ParamSlot::new(
                format!("lstm{i}.weights"),
                &mut layer.weights.data,
                &grad.0.data,
            ));
            slots.push(ParamSlot::new(
                format!("lstm{i}.bias"),
                &mut layer.bias,
                &grad.1,
            ));
        }
        slots.push(ParamSlot::new(
            "head.weights",
            &mut self.lstm.head.weights.data,
            &g.head.0.data,
        ));
        slots.push(ParamSlot::new(
            "head.bias",
            &mut self.lstm.head.bias,
            &g.head.1,
        ));
        slots
    }
}

/// Frozen per-geometry inputs: scaled Green maps, their convolutions and scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeatures {
    pub g_r: Tensor2,
    pub g_i: Tensor2,
    pub conv_r: Tensor2,
    pub conv_i: Tensor2,
    pub scalars: [f64; SCALARS],
    pub warnings: Vec<String>,
}

fn green_maps(
    pann: &PannModel,
    geometry: &ArrayGeometry,
) -> Result<(Tensor2, Tensor2, Vec<String>)> {
    let pred = pann_predict(pann, &PannInput::of(geometry)?)?;
    let s = pred.side;
    let full = mirror_upper(s, &pred.values)?;
    let scale = 1.0 / pann.meta.output_scale;
    let g_r = Tensor2::from_fn(s, s, |r, c| full[r * s + c].re * scale);
    let g_i = Tensor2::from_fn(s, s, |r, c| full[r * s + c].im * scale);
    Ok((g_r, g_i, pred.warnings))
}

fn sample_features(
    pann: &PannModel,
    kernel: &PhysicsKernel,
    norm: &InputNormalization,
    geometry: &ArrayGeometry,
) -> Result<SampleFeatures> {
    if geometry.element_count() != 2 {
        return Err(Error::domain(format!(
            "two-port prediction needs 2 elements, got {}",
            geometry.element_count()
        )));
    }
    if geometry.dipole.segments != pann.meta.segments {
        return Err(Error::domain(format!(
            "geometry has {} segments per dipole, the model was trained with {}",
            geometry.dipole.segments, pann.meta.segments
        )));
    }
    let (g_r, g_i, mut warnings) = green_maps(pann, geometry)?;
    let feats = PannInput::of(geometry)?.features();
    for w in norm.range_warnings(&feats) {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
    Ok(SampleFeatures {
        conv_r: conv2d(&g_r, &kernel.weights)?,
        conv_i: conv2d(&g_i, &kernel.weights)?,
        g_r,
        g_i,
        scalars: norm.apply(&feats),
        warnings,
    })
}

/// Places matrices side by side: block b occupies columns b*S..(b+1)*S.
fn hcat(blocks: &[&Tensor2]) -> Tensor2 {
    let rows = blocks[0].rows;
    let w = blocks[0].cols;
    Tensor2::from_fn(rows, w * blocks.len(), |r, c| blocks[c / w].get(r, c % w))
}

fn column_block(t: &Tensor2, b: usize, w: usize) -> Tensor2 {
    Tensor2::from_fn(t.rows, w, |r, c| t.get(r, b * w + c))
}

struct BatchRecord {
    fusion: FusionRecord,
    fused: Vec<Tensor2>,
    lstm: LstmRecord,
    head: DenseRecord,
}

fn forward_batch(bundle: &ModelBundle, batch: &[&SampleFeatures]) -> Result<BatchRecord> {
    let s = bundle.side();
    let n = bundle.conv_side();
    let x_r = hcat(&batch.iter().map(|f| &f.g_r).collect::<Vec<_>>());
    let x_i = hcat(&batch.iter().map(|f| &f.g_i).collect::<Vec<_>>());
    let fusion = fuse(&x_r, &x_i, &bundle.fusion)?;
    let fused: Vec<Tensor2> = (0..batch.len())
        .map(|b| column_block(&fusion.fused.matrix, b, s))
        .collect();
    let conv_f = fused
        .iter()
        .map(|m| conv2d(m, &bundle.kernel.weights))
        .collect::<Result<Vec<_>>>()?;
    let width = bundle.sequence_width();
    let sequence: Vec<Tensor2> = (0..n)
        .map(|t| {
            Tensor2::from_fn(width, batch.len(), |r, b| {
                let f = batch[b];
                match r / n {
                    0 => f.conv_r.get(t, r),
                    1 => f.conv_i.get(t, r - n),
                    2 => conv_f[b].get(t, r - 2 * n),
                    _ => f.scalars[r - 3 * n],
                }
            })
        })
        .collect();
    let lstm = lstm_forward_batch(&bundle.lstm, &sequence)?;
    let head = bundle
        .lstm
        .head
        .forward_matrix(lstm.top.last().expect("non-empty sequence"))?;
    Ok(BatchRecord {
        fusion,
        fused,
        lstm,
        head,
    })
}

struct Gradients {
    fusion: [(Tensor2, Vec<f64>); 3],
    lstm: Vec<(Tensor2, Vec<f64>)>,
    head: (Tensor2, Vec<f64>),
}

impl Gradients {
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for (w, b) in self
            .fusion
            .iter_mut()
            .chain(self.lstm.iter_mut())
            .chain(std::iter::once(&mut self.head))
        {
            out.push(&mut w.data);
            out.push(b);
        }
        out
    }

    /// Scales all gradients so their global norm is at most `max_norm`; returns the original norm.
    fn clip(&mut self, max_norm: f64) -> f64 {
        let norm = self
            .buffers_mut()
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if norm > max_norm {
            let s = max_norm / norm;
            for b in self.buffers_mut() {
                b.iter_mut().for_each(|v| *v *= s);
            }
        }
        norm
    }
}

/// Mean squared error of the normalized outputs and the full parameter gradient.
fn batch_gradients(
    bundle: &ModelBundle,
    batch: &[&SampleFeatures],
    targets: &Tensor2,
) -> Result<(f64, Gradients)> {
    let rec = forward_batch(bundle, batch)?;
    let out = &rec.head.output;
    let diff = out.sub(targets)?;
    let count = diff.data.len() as f64;
    let loss = diff.data.iter().map(|v| v * v).sum::<f64>() / count;
    let d_out = diff.scale(2.0 / count);
    let head = bundle.lstm.head.backward(&rec.head, &d_out)?;
    let n = bundle.conv_side();
    let h = bundle.lstm.top_hidden();
    let mut d_top = vec![Tensor2::zeros(h, batch.len()); n];
    d_top[n - 1] = head.input.clone();
    let lstm = lstm_backward(&bundle.lstm, &rec.lstm, &d_top)?;
    let s = bundle.side();
    let mut d_fused = Vec::with_capacity(batch.len());
    for (b, fused) in rec.fused.iter().enumerate() {
        let d_conv = Tensor2::from_fn(n, n, |t, c| lstm.inputs[t].get(2 * n + c, b));
        d_fused.push(conv2d_backward(fused, &bundle.kernel.weights, &d_conv)?.0);
    }
    let d_fused = hcat(&d_fused.iter().collect::<Vec<_>>());
    debug_assert_eq!(d_fused.shape(), (s, s * batch.len()));
    let fg = fusion_grads(&bundle.fusion, &rec.fusion, &d_fused)?;
    Ok((
        loss,
        Gradients {
            fusion: [
                (fg.map_r.weights, fg.map_r.bias),
                (fg.map_i.weights, fg.map_i.bias),
                (fg.attn.weights, fg.attn.bias),
            ],
            lstm: lstm.layers,
            head: (head.weights, head.bias),
        },
    ))
}

/// One epoch of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean normalized batch loss over the epoch.
    pub loss: f64,
    pub learning_rate: f64,
    /// Largest pre-clipping gradient norm seen in the epoch.
    pub grad_norm: f64,
}

pub fn two_port_history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss,learning_rate,grad_norm\n");
    for h in history {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            h.epoch, h.loss, h.learning_rate, h.grad_norm
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortTraining {
    pub bundle: ModelBundle,
    pub history: Vec<EpochRecord>,
    /// Indices into the input samples.
    pub train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
    /// Normalized loss over the training split after the last update.
    pub final_loss: f64,
}

/// Seeded shuffle of 0..n split into (train, holdout).
pub fn split_indices(
    n: usize,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::domain(format!(
            "holdout fraction must be in [0, 1), got {holdout_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5917));
    let holdout = (n as f64 * holdout_fraction).round() as usize;
    let train = idx.split_off(holdout);
    if train.is_empty() {
        return Err(Error::domain("training split is empty"));
    }
    Ok((train, idx))
}

fn loss_over(
    bundle: &ModelBundle,
    feats: &[SampleFeatures],
    targets: &[[f64; 6]],
    batch_size: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for (fs, ts) in feats.chunks(batch_size).zip(targets.chunks(batch_size)) {
        let refs: Vec<&SampleFeatures> = fs.iter().collect();
        let out = forward_batch(bundle, &refs)?.head.output;
        for (b, t) in ts.iter().enumerate() {
            for (j, tj) in t.iter().enumerate() {
                total += (out.get(j, b) - tj).powi(2);
            }
        }
    }
    Ok(total / (6 * targets.len()) as f64)
}

pub fn train_two_port(samples: &[Sample], config: &TwoPortConfig) -> Result<TwoPortTraining> {
    if samples.is_empty() {
        return Err(Error::domain("two-port training needs at least one sample"));
    }
    if config.batch_size == 0 || config.hidden == 0 || config.lstm_layers == 0 {
        return Err(Error::domain(
            "batch size, hidden width and layer count must be positive",
        ));
    }
    let (train_idx, holdout_idx) =
        split_indices(samples.len(), config.holdout_fraction, config.seed)?;
    let train: Vec<&Sample> = train_idx.iter().map(|&i| &samples[i]).collect();
    for s in &train {
        if s.geometry.element_count() != 2 || s.z_port.ports() != 2 {
            return Err(Error::domain("two-port samples must have two elements"));
        }
    }

    let mut pann_config = config.pann.clone();
    pann_config.segments = train[0].geometry.dipole.segments;
    pann_config.samples = train.iter().map(|s| s.geometry.clone()).collect();
    pann_config.seed = config.seed;
    let pann = train_pann(&pann_config)?.model;

    let kernel = build_kernel(config.kernel_side, config.kernel_decay)?;
    let raw_feats: Vec<[f64; 4]> = train
        .iter()
        .map(|s| PannInput::of(&s.geometry).map(|p| p.features()))
        .collect::<Result<_>>()?;
    let input_normalization = InputNormalization::fit(&raw_feats)?;
    let raw_targets: Vec<[f64; 6]> = train
        .iter()
        .map(|s| target_vector(&s.z_port.entries))
        .collect::<Result<_>>()?;
    let targets = TargetNormalization::fit(&raw_targets)?;
    let norm_targets: Vec<[f64; 6]> = raw_targets.iter().map(|t| targets.normalize(t)).collect();

    let side = pann.side();
    if config.kernel_side > side {
        return Err(Error::domain("kernel larger than the Green grid"));
    }
    let conv_side = side + 1 - config.kernel_side;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fusion = FusionParams::init(&mut rng, side);
    let lstm = LstmParams::init(
        &mut rng,
        3 * conv_side + SCALARS,
        config.hidden,
        config.lstm_layers,
        6,
    );
    let optimizer = AdamConfig::with_learning_rate(config.learning_rate);
    let mut bundle = ModelBundle {
        pann,
        fusion,
        kernel,
        lstm,
        meta: TwoPortMeta {
            input_normalization,
            targets,
            train_loss: f64::NAN,
        },
        seed: config.seed,
        optimizer,
        epoch: 0,
    };
    let feats: Vec<SampleFeatures> = train
        .iter()
        .map(|s| {
            sample_features(
                &bundle.pann,
                &bundle.kernel,
                &bundle.meta.input_normalization,
                &s.geometry,
            )
        })
        .collect::<Result<_>>()?;

    let mut adam = Adam::new(optimizer)?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..feats.len()).collect();
    for epoch in 0..config.epochs {
        let lr = cosine_learning_rate(config.learning_rate, config.lr_floor, epoch, config.epochs);
        adam.set_learning_rate(lr);
        order.shuffle(&mut rng);
        let (mut sum, mut batches, mut max_norm) = (0.0, 0usize, 0.0f64);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&SampleFeatures> = chunk.iter().map(|&i| &feats[i]).collect();
            let t = Tensor2::from_fn(6, chunk.len(), |j, b| norm_targets[chunk[b]][j]);
            let (loss, mut grads) = batch_gradients(&bundle, &batch, &t)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    detail: format!("loss is not finite ({loss})"),
                });
            }
            let norm = match config.clip_norm {
                Some(c) => grads.clip(c),
                None => grads.clip(f64::INFINITY),
            };
            max_norm = max_norm.max(norm);
            adam.step(&mut bundle.parameter_slots(&grads))
                .map_err(|e| match e {
                    Error::Training { detail, .. } => Error::Training { epoch, detail },
                    other => other,
                })?;
            sum += loss;
            batches += 1;
        }
        history.push(EpochRecord {
            epoch,
            loss: sum / batches as f64,
            learning_rate: lr,
            grad_norm: max_norm,
        });
    }
    let final_loss = loss_over(&bundle, &feats, &norm_targets, config.batch_size)?;
    if !final_loss.is_finite() {
        return Err(Error::Training {
            epoch: config.epochs,
            detail: "final loss is not finite".into(),
        });
    }
    bundle.epoch = config.epochs;
    bundle.meta.train_loss = final_loss;
    Ok(TwoPortTraining {
        bundle,
        history,
        train_indices: train_idx,
        holdout_indices: holdout_idx,
        final_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPortPrediction {
    pub z11: Complex64,
    pub z12: Complex64,
    pub z22: Complex64,
    /// [[z11, z12], [z12, z22]].
    pub reconstructed: CMatrix,
    pub warnings: Vec<String>,
}

fn prediction_from(
    outputs: &[f64],
    targets: &TargetNormalization,
    warnings: Vec<String>,
) -> TwoPortPrediction {
    let z = targets.denormalize(outputs);
    let (z11, z12, z22) = (
        Complex64::new(z[0], z[1]),
        Complex64::new(z[2], z[3]),
        Complex64::new(z[4], z[5]),
    );
    let reconstructed = CMatrix::from_fn(2, 2, |p, q| match (p, q) {
        (0, 0) => z11,
        (1, 1) => z22,
        _ => z12,
    });
    TwoPortPrediction {
        z11,
        z12,
        z22,
        reconstructed,
        warnings,
    }
}

pub fn predict_two_port(
    bundle: &ModelBundle,
    geometry: &ArrayGeometry,
) -> Result<TwoPortPrediction> {
    Ok(predict_two_port_batch(bundle, std::slice::from_ref(geometry))?.remove(0))
}

/// Predictions for several two-element geometries in one batched pass.
pub fn predict_two_port_batch(
    bundle: &ModelBundle,
    geometries: &[ArrayGeometry],
) -> Result<Vec<TwoPortPrediction>> {
    if !bundle.is_trained() {
        return Err(Error::Model("bundle is untrained (0 epochs)".into()));
    }
    let mut out = Vec::with_capacity(geometries.len());
    for chunk in geometries.chunks(64) {
        let feats = chunk
            .iter()
            .map(|g| {
                sample_features(
                    &bundle.pann,
                    &bundle.kernel,
                    &bundle.meta.input_normalization,
                    g,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&SampleFeatures> = feats.iter().collect();
        let y = forward_batch(bundle, &refs)?.head.output;
        for (b, f) in feats.into_iter().enumerate() {
            out.push(prediction_from(
                &y.column(b),
                &bundle.meta.targets,
                f.warnings,
            ));
        }
    }
    Ok(out)
}

/// ||Z_pred - Z_true||_F / ||Z_true||_F for each sample.
pub fn relative_errors(bundle: &ModelBundle, samples: &[Sample]) -> Result<Vec<f64>> {
    let geoms: Vec<ArrayGeometry> = samples.iter().map(|s| s.geometry.clone()).collect();
    let preds = predict_two_port_batch(bundle, &geoms)?;
    preds
        .iter()
        .zip(samples)
        .map(|(p, s)| {
            Ok(p.reconstructed.sub(&s.z_port.entries)?.frobenius() / s.z_port.entries.frobenius())
        })
        .collect()
}
