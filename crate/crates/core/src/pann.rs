//! Physics-aware network that regresses the frequency-factored Green's matrix,
//! trained only against the analytic expression, with an adaptive real/imaginary loss.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{green_matrix, ArrayGeometry, DipoleSpec, GreenKind};
use crate::nn::{
    cosine_learning_rate, Activation, Adam, AdamConfig, Checkpoint, DenseLayer, DenseRecord,
    LayerRecord, ParamSlot, Tensor2, CHECKPOINT_SCHEMA_VERSION,
};

/// Nominal frequency for the single-dipole setting.
pub const NOMINAL_FREQUENCY_HZ: f64 = 3e9;
/// Nominal wire radius in wavelengths.
pub const NOMINAL_RADIUS_WAVELENGTHS: f64 = 0.002;

/// Upper triangle (with diagonal) of a symmetric side x side matrix, row by row.
pub fn upper_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Mirrors a packed upper triangle into a full row-major matrix; exactly symmetric.
pub fn mirror_upper(side: usize, upper: &[Complex64]) -> Result<Vec<Complex64>> {
    if upper.len() != upper_len(side) {
        return Err(Error::shape(format!(
            "{} packed values for side {side}",
            upper.len()
        )));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); side * side];
    let mut k = 0;
    for m in 0..side {
        for n in m..side {
            full[m * side + n] = upper[k];
            full[n * side + m] = upper[k];
            k += 1;
        }
    }
    Ok(full)
}

fn split(values: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        values.iter().map(|z| z.re).collect(),
        values.iter().map(|z| z.im).collect(),
    )
}

/// Half-wave single dipole at the nominal radius; the factored targets do not depend on f.
pub fn nominal_geometry(segments: usize) -> Result<ArrayGeometry> {
    let dipole = DipoleSpec::half_wave(NOMINAL_FREQUENCY_HZ, NOMINAL_RADIUS_WAVELENGTHS, segments)?;
    ArrayGeometry::single(dipole, NOMINAL_FREQUENCY_HZ)
}

/// Real and imaginary parts of the frequency-factored Green matrix upper triangle
/// for the nominal half-wave dipole with `segments` segments.
pub fn analytic_targets(segments: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if segments < 2 {
        return Err(Error::domain(format!("need >= 2 segments, got {segments}")));
    }
    analytic_targets_for(&nominal_geometry(segments)?)
}

pub fn analytic_targets_for(geometry: &ArrayGeometry) -> Result<(Vec<f64>, Vec<f64>)> {
    geometry.validate()?;
    Ok(split(
        &green_matrix(geometry, GreenKind::FrequencyFactored).upper_triangle(),
    ))
}

/// (omega_r, omega_i): the larger loss gets alpha + (1 - alpha) |L_r - L_i| / (L_r + L_i).
pub fn adaptive_weights(l_r: f64, l_i: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(l_r >= 0.0 && l_i >= 0.0) {
        return Err(Error::domain(format!(
            "losses must be >= 0, got {l_r}, {l_i}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if l_r == l_i {
        return Ok((0.5, 0.5));
    }
    let omega = alpha + (1.0 - alpha) * (l_r - l_i).abs() / (l_r + l_i);
    Ok(if l_r > l_i {
        (omega, 1.0 - omega)
    } else {
        (1.0 - omega, omega)
    })
}

/// Loss weighting state carried across epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveLossState {
    pub alpha: f64,
    pub omega_r: f64,
    pub omega_i: f64,
    pub adaptive: bool,
}

impl AdaptiveLossState {
    pub fn new(alpha: f64, adaptive: bool) -> Self {
        AdaptiveLossState {
            alpha,
            omega_r: 0.5,
            omega_i: 0.5,
            adaptive,
        }
    }

    /// Sets the weights for the next epoch from this epoch's losses.
    pub fn update(&mut self, l_r: f64, l_i: f64) -> Result<()> {
        if self.adaptive {
            (self.omega_r, self.omega_i) = adaptive_weights(l_r, l_i, self.alpha)?;
        }
        Ok(())
    }
}

/// (L_r, L_i): MSE of the real half and of the imaginary half.
pub fn component_losses(pred: &[f64], targets: &[f64]) -> Result<(f64, f64)> {
    if pred.len() != targets.len() || pred.len() % 2 != 0 || pred.is_empty() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            targets.len()
        )));
    }
    let m = pred.len() / 2;
    let l = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / m as f64
    };
    Ok((l(&pred[..m], &targets[..m]), l(&pred[m..], &targets[m..])))
}

/// omega_r L_r + omega_i L_i on [real half | imaginary half] vectors.
pub fn total_loss(pred: &[f64], targets: &[f64], state: &AdaptiveLossState) -> Result<f64> {
    let (l_r, l_i) = component_losses(pred, targets)?;
    Ok(state.omega_r * l_r + state.omega_i * l_i)
}

/// Network inputs: (spacing, length, radius, frequency), spacing 0 for a single dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PannInput {
    pub spacing_m: f64,
    pub length_m: f64,
    pub radius_m: f64,
    pub frequency_hz: f64,
}

impl PannInput {
    pub fn features(&self) -> [f64; 4] {
        [
            self.spacing_m,
            self.length_m,
            self.radius_m,
            self.frequency_hz,
        ]
    }

    pub fn of(geometry: &ArrayGeometry) -> Result<Self> {
        let spacing_m = match geometry.element_count() {
            1 => 0.0,
            2 => geometry.spacings_m()[0],
            m => {
                return Err(Error::domain(format!(
                    "the Green network models 1 or 2 elements, got {m}"
                )))
            }
        };
        Ok(PannInput {
            spacing_m,
            length_m: geometry.dipole.length_m,
            radius_m: geometry.dipole.radius_m,
            frequency_hz: geometry.frequency_hz,
        })
    }
}

pub const FEATURE_NAMES: [&str; 4] = ["spacing_m", "length_m", "radius_m", "frequency_hz"];

/// Z-score constants plus the observed training range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNormalization {
    pub mean: [f64; 4],
    pub std: [f64; 4],
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl InputNormalization {
    pub fn fit(rows: &[[f64; 4]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("normalization needs at least one sample"));
        }
        let n = rows.len() as f64;
        let mut out = InputNormalization {
            mean: [0.0; 4],
            std: [0.0; 4],
            min: [f64::INFINITY; 4],
            max: [f64::NEG_INFINITY; 4],
        };
        for j in 0..4 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            out.mean[j] = mean;
            // A feature that never varies maps to 0 instead of dividing by zero.
            out.std[j] = if var.sqrt() > 1e-12 * mean.abs().max(1e-300) {
                var.sqrt()
            } else {
                1.0
            };
            for r in rows {
                out.min[j] = out.min[j].min(r[j]);
                out.max[j] = out.max[j].max(r[j]);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = (x[j] - self.mean[j]) / self.std[j];
        }
        out
    }

    /// One message per feature outside the training range (relative slack 1e-9).
    pub fn range_warnings(&self, x: &[f64; 4]) -> Vec<String> {
        let mut w = Vec::new();
        for j in 0..4 {
            let slack = 1e-9 * self.max[j].abs().max(self.min[j].abs());
            if x[j] < self.min[j] - slack || x[j] > self.max[j] + slack {
                w.push(format!(
                    "{} = {} outside training range [{}, {}]; extrapolating",
                    FEATURE_NAMES[j], x[j], self.min[j], self.max[j]
                ));
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PannConfig {
    pub segments: usize,
    /// Training geometries (1 or 2 elements). Empty means the nominal single dipole.
    #[serde(default)]
    pub samples: Vec<ArrayGeometry>,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Final learning rate as a fraction of the initial one (cosine schedule).
    pub lr_floor: f64,
    pub alpha: f64,
    pub adaptive: bool,
    pub seed: u64,
}

impl Default for PannConfig {
    fn default() -> Self {
        PannConfig {
            segments: 16,
            samples: Vec::new(),
            hidden: vec![128, 128, 128],
            epochs: 1200,
            learning_rate: 1e-3,
            lr_floor: 0.0,
            alpha: 0.5,
            adaptive: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PannMeta {
    pub segments: usize,
    pub elements: usize,
    pub normalization: InputNormalization,
    /// Network outputs are multiplied by this to give Green values.
    pub output_scale: f64,
    pub alpha: f64,
    pub adaptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PannFile", try_from = "PannFile")]
pub struct PannModel {
    pub layers: Vec<DenseLayer>,
    pub meta: PannMeta,
    pub seed: u64,
    pub optimizer: AdamConfig,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct PannFile {
    #[serde(flatten)]
    checkpoint: Checkpoint,
    pann: PannMeta,
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub l_r: f64,
    pub l_i: f64,
    pub w_r: f64,
    pub w_i: f64,
    pub l_total: f64,
}

/// Losses of the trained model, evaluated after the last update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PannEvaluation {
    pub l_r: f64,
    pub l_i: f64,
    pub w_r: f64,
    pub w_i: f64,
    pub l_total: f64,
    /// (L_r + L_i) / 2, comparable across weighting schemes.
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PannTraining {
    pub model: PannModel,
    pub history: Vec<LossRecord>,
    pub final_eval: PannEvaluation,
}

pub fn history_csv(history: &[LossRecord]) -> String {
    let mut out = String::from("epoch,L_r,L_i,w_r,w_i,L_total\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            h.epoch, h.l_r, h.l_i, h.w_r, h.w_i, h.l_total
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PannPrediction {
    /// Packed upper triangle of the factored Green matrix.
    pub values: Vec<Complex64>,
    pub side: usize,
    pub warnings: Vec<String>,
}

impl PannPrediction {
    pub fn full_matrix(&self) -> Vec<Complex64> {
        mirror_upper(self.side, &self.values).expect("prediction length matches its side")
    }
}

struct TrainingSet {
    inputs: Tensor2,
    targets: Tensor2,
    normalization: InputNormalization,
    elements: usize,
}

fn training_set(config: &PannConfig) -> Result<TrainingSet> {
    let samples = if config.samples.is_empty() {
        vec![nominal_geometry(config.segments)?]
    } else {
        config.samples.clone()
    };
    let elements = samples[0].element_count();
    let mut feats = Vec::with_capacity(samples.len());
    let mut cols = Vec::with_capacity(samples.len());
    for g in &samples {
        if g.dipole.segments != config.segments || g.element_count() != elements {
            return Err(Error::domain(
                "all training geometries must share segments and element count",
            ));
        }
        feats.push(PannInput::of(g)?.features());
        let (re, im) = analytic_targets_for(g)?;
        cols.push([re, im].concat());
    }
    let normalization = InputNormalization::fit(&feats)?;
    let k = samples.len();
    let inputs = Tensor2::from_fn(4, k, |r, c| normalization.apply(&feats[c])[r]);
    let targets = Tensor2::from_fn(cols[0].len(), k, |r, c| cols[c][r]);
    Ok(TrainingSet {
        inputs,
        targets,
        normalization,
        elements,
    })
}

impl PannModel {
    pub fn side(&self) -> usize {
        self.meta.segments * self.meta.elements
    }

    pub fn output_len(&self) -> usize {
        2 * upper_len(self.side())
    }

    fn forward_records(&self, x: &Tensor2) -> Result<Vec<DenseRecord>> {
        let mut records: Vec<DenseRecord> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = records.last().map_or(x, |r| &r.output);
            let rec = layer.forward_matrix(input)?;
            records.push(rec);
        }
        Ok(records)
    }

    /// Raw Green values, one column per input column.
    fn predict_matrix(&self, x: &Tensor2) -> Result<Tensor2> {
        let records = self.forward_records(x)?;
        Ok(records
            .last()
            .expect("at least one layer")
            .output
            .scale(self.meta.output_scale))
    }

    fn parameter_slots<'a>(&'a mut self, grads: &'a [(Tensor2, Vec<f64>)]) -> Vec<ParamSlot<'a>> {
        let mut slots = Vec::with_capacity(2 * self.layers.len());
        for (i, (layer, (gw, gb))) in self.layers.iter_mut().zip(grads).enumerate() {
            slots.push(ParamSlot::new(
                format!("pann.layer{i}.weights"),
                &mut layer.weights.data,
                &gw.data,
            ));
            slots.push(ParamSlot::new(
                format!("pann.layer{i}.bias"),
                &mut layer.bias,
                gb,
            ));
        }
        slots
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(i, l)| LayerRecord::dense(format!("layer{i}"), l))
                .collect(),
            optimizer: self.optimizer,
            epoch: self.epoch,
            loss: self.loss,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<PannModel> for PannFile {
    fn from(model: PannModel) -> Self {
        PannFile {
            checkpoint: model.to_checkpoint(),
            pann: model.meta,
        }
    }
}

impl TryFrom<PannFile> for PannModel {
    type Error = Error;

    fn try_from(file: PannFile) -> Result<Self> {
        file.checkpoint.check_version()?;
        let layers = file
            .checkpoint
            .layers
            .iter()
            .map(LayerRecord::to_dense)
            .collect::<Result<Vec<_>>>()?;
        let model = PannModel {
            layers,
            meta: file.pann,
            seed: file.checkpoint.seed,
            optimizer: file.checkpoint.optimizer,
            epoch: file.checkpoint.epoch,
            loss: file.checkpoint.loss,
        };
        if model.layers.last().map(|l| l.outputs()) != Some(model.output_len()) {
            return Err(Error::Model(
                "Green network output width does not match its grid".into(),
            ));
        }
        Ok(model)
    }
}

fn evaluate(
    model: &PannModel,
    set: &TrainingSet,
    alpha: f64,
    adaptive: bool,
) -> Result<PannEvaluation> {
    let y = model.predict_matrix(&set.inputs)?;
    let (l_r, l_i) = batch_losses(&y, &set.targets);
    let (w_r, w_i) = if adaptive {
        adaptive_weights(l_r, l_i, alpha)?
    } else {
        (0.5, 0.5)
    };
    Ok(PannEvaluation {
        l_r,
        l_i,
        w_r,
        w_i,
        l_total: w_r * l_r + w_i * l_i,
        mse: 0.5 * (l_r + l_i),
    })
}

/// Per-component MSE over all entries and all samples.
fn batch_losses(y: &Tensor2, t: &Tensor2) -> (f64, f64) {
    let m = y.rows / 2;
    let count = (m * y.cols) as f64;
    let (mut l_r, mut l_i) = (0.0, 0.0);
    for r in 0..y.rows {
        let s: f64 = y
            .row(r)
            .iter()
            .zip(t.row(r))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if r < m {
            l_r += s;
        } else {
            l_i += s;
        }
    }
    (l_r / count, l_i / count)
}

pub fn train_pann(config: &PannConfig) -> Result<PannTraining> {
    if config.segments < 2 {
        return Err(Error::domain("need >= 2 segments"));
    }
    if config.hidden.is_empty() || config.hidden.contains(&0) {
        return Err(Error::domain("hidden layer widths must be positive"));
    }
    let set = training_set(config)?;
    let outputs = set.targets.rows;
    let output_scale = set.targets.max_abs().max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut layers = Vec::with_capacity(config.hidden.len() + 1);
    let mut width = 4;
    for &h in &config.hidden {
        layers.push(DenseLayer::init(&mut rng, width, h, Activation::Tanh));
        width = h;
    }
    layers.push(DenseLayer::init(
        &mut rng,
        width,
        outputs,
        Activation::Identity,
    ));
    let optimizer = AdamConfig::with_learning_rate(config.learning_rate);
    let mut model = PannModel {
        layers,
        meta: PannMeta {
            segments: config.segments,
            elements: set.elements,
            normalization: set.normalization.clone(),
            output_scale,
            alpha: config.alpha,
            adaptive: config.adaptive,
        },
        seed: config.seed,
        optimizer,
        epoch: 0,
        loss: f64::NAN,
    };
    let mut adam = Adam::new(optimizer)?;
    let mut state = AdaptiveLossState::new(config.alpha, config.adaptive);
    let mut history = Vec::with_capacity(config.epochs);
    let m = outputs / 2;
    let count = (m * set.inputs.cols) as f64;
    for epoch in 0..config.epochs {
        let records = model.forward_records(&set.inputs)?;
        let out = &records.last().expect("at least one layer").output;
        let y = out.scale(output_scale);
        let (l_r, l_i) = batch_losses(&y, &set.targets);
        if !(l_r.is_finite() && l_i.is_finite()) {
            return Err(Error::Training {
                epoch,
                detail: format!("loss is not finite (L_r {l_r}, L_i {l_i})"),
            });
        }
        let (w_r, w_i) = (state.omega_r, state.omega_i);
        history.push(LossRecord {
            epoch,
            l_r,
            l_i,
            w_r,
            w_i,
            l_total: w_r * l_r + w_i * l_i,
        });
        let mut upstream = y.sub(&set.targets)?;
        for r in 0..upstream.rows {
            let w = if r < m { w_r } else { w_i };
            let s = 2.0 * w * output_scale / count;
            for v in &mut upstream.data[r * upstream.cols..(r + 1) * upstream.cols] {
                *v *= s;
            }
        }
        let mut grads = vec![(Tensor2::zeros(0, 0), Vec::new()); model.layers.len()];
        for i in (0..model.layers.len()).rev() {
            let g = model.layers[i].backward(&records[i], &upstream)?;
            upstream = g.input;
            grads[i] = (g.weights, g.bias);
        }
        adam.set_learning_rate(cosine_learning_rate(
            config.learning_rate,
            config.lr_floor,
            epoch,
            config.epochs,
        ));
        adam.step(&mut model.parameter_slots(&grads))
            .map_err(|e| match e {
                Error::Training { detail, .. } => Error::Training { epoch, detail },
                other => other,
            })?;
        state.update(l_r, l_i)?;
    }
    let final_eval = evaluate(&model, &set, config.alpha, config.adaptive)?;
    if !final_eval.mse.is_finite() {
        return Err(Error::Training {
            epoch: config.epochs,
            detail: "final loss is not finite".into(),
        });
    }
    model.epoch = config.epochs;
    model.loss = final_eval.l_total;
    Ok(PannTraining {
        model,
        history,
        final_eval,
    })
}

/// Predicted factored Green upper triangle for the given inputs.
pub fn pann_predict(model: &PannModel, input: &PannInput) -> Result<PannPrediction> {
    let feats = input.features();
    if feats.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("network inputs must be finite"));
    }
    let warnings = model.meta.normalization.range_warnings(&feats);
    let x = Tensor2::column_vector(&model.meta.normalization.apply(&feats));
    let y = model.predict_matrix(&x)?;
    let m = y.rows / 2;
    let values = (0..m)
        .map(|r| Complex64::new(y.data[r], y.data[m + r]))
        .collect();
    Ok(PannPrediction {
        values,
        side: model.side(),
        warnings,
    })
}
