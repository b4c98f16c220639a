//! Large-array synthesis: a pairwise prior assembled from two-port predictions,
//! refined by an LSTM that reads one token per packed upper-triangle entry and
//! emits a residual for each.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constraints::SpacingConstraints;
use super::dataset::Sample;
use super::packing::{pack_upper, packed_pairs};
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::CMatrix;
use crate::nn::{
    cosine_learning_rate, Adam, AdamConfig, Checkpoint, LayerRecord, ParamSlot, Tensor2,
    CHECKPOINT_SCHEMA_VERSION,
};
use crate::pc_lstm::{
    lstm_backward, lstm_forward_batch, predict_two_port_batch, split_indices, LstmLayer,
    LstmParams, ModelBundle,
};

/// Width of each refinement token.
pub const TOKEN_WIDTH: usize = 11;

/// The assembled pairwise matrix before refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMatrix {
    pub matrix: CMatrix,
    pub warnings: Vec<String>,
}

/// Two-element geometry with the given spacing, sharing the array's dipole and frequency.
fn pair_geometry(array: &ArrayGeometry, spacing_m: f64) -> Result<ArrayGeometry> {
    ArrayGeometry::from_spacings(array.dipole.clone(), &[spacing_m], array.frequency_hz)
}

fn spacings_wavelengths(geometry: &ArrayGeometry) -> Vec<f64> {
    let lam = geometry.wavelength();
    geometry.spacings_m().iter().map(|d| d / lam).collect()
}

/// Pairwise prior: mutual entries from the two-port model for separations within the
/// cutoff, exact zeros beyond it, and self terms from the two-port prediction at each
/// element's nearest-neighbour spacing (z11 when that neighbour is to the right, z22
/// when it is to the left).
pub fn assemble_prior(
    bundle: &ModelBundle,
    geometry: &ArrayGeometry,
    constraints: &SpacingConstraints,
) -> Result<PriorMatrix> {
    let m = geometry.element_count();
    if m < 2 {
        return Err(Error::domain("synthesis needs at least 2 elements"));
    }
    constraints.check(&spacings_wavelengths(geometry))?;
    let lam = geometry.wavelength();
    let x = &geometry.positions_m;
    let mut queries: Vec<f64> = Vec::new();
    let index_of = |d: f64, queries: &mut Vec<f64>| -> usize {
        match queries.iter().position(|&q| q == d) {
            Some(i) => i,
            None => {
                queries.push(d);
                queries.len() - 1
            }
        }
    };
    let mut mutual = Vec::new();
    for p in 0..m {
        for q in p + 1..m {
            let d = x[q] - x[p];
            if d / lam <= constraints.cutoff {
                mutual.push((p, q, index_of(d, &mut queries)));
            }
        }
    }
    let mut selfs = Vec::with_capacity(m);
    for p in 0..m {
        let left = (p > 0).then(|| x[p] - x[p - 1]);
        let right = (p + 1 < m).then(|| x[p + 1] - x[p]);
        let (d, port) = match (left, right) {
            (Some(l), Some(r)) if l < r => (l, 1),
            (_, Some(r)) => (r, 0),
            (Some(l), None) => (l, 1),
            (None, None) => unreachable!("m >= 2"),
        };
        selfs.push((index_of(d, &mut queries), port));
    }
    let geoms = queries
        .iter()
        .map(|&d| pair_geometry(geometry, d))
        .collect::<Result<Vec<_>>>()?;
    let preds = predict_two_port_batch(bundle, &geoms)?;
    let mut matrix = CMatrix::zeros(m, m);
    for (p, q, i) in mutual {
        matrix[(p, q)] = preds[i].z12;
        matrix[(q, p)] = preds[i].z12;
    }
    for (p, (i, port)) in selfs.into_iter().enumerate() {
        matrix[(p, p)] = if port == 0 {
            preds[i].z11
        } else {
            preds[i].z22
        };
    }
    let mut warnings: Vec<String> = Vec::new();
    for p in &preds {
        for w in &p.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    Ok(PriorMatrix { matrix, warnings })
}

/// One token per packed entry (p <= q): scaled prior value, diagonal and in-cutoff
/// flags, the free-space phase term exp(-j 2 pi s) / s at the pair separation s (in
/// wavelengths, clamped below at the cutoff), the clamped separation, and the gaps
/// on either side of both elements.
pub fn tokens(
    geometry: &ArrayGeometry,
    prior: &CMatrix,
    scale: f64,
    constraints: &SpacingConstraints,
) -> Vec<[f64; TOKEN_WIDTH]> {
    let m = geometry.element_count();
    let lam = geometry.wavelength();
    let x: Vec<f64> = geometry.positions_m.iter().map(|v| v / lam).collect();
    let gap = |p: usize, right: bool| -> f64 {
        if right {
            if p + 1 < m {
                x[p + 1] - x[p]
            } else {
                0.0
            }
        } else if p > 0 {
            x[p] - x[p - 1]
        } else {
            0.0
        }
    };
    packed_pairs(m)
        .into_iter()
        .map(|(p, q)| {
            let s = x[q] - x[p];
            let z = prior[(p, q)] / scale;
            let (g, within) = if p == q {
                (Complex64::new(0.0, 0.0), 0.0)
            } else {
                let se = s.max(constraints.cutoff);
                let g = Complex64::from_polar(constraints.cutoff / se, -TAU * s);
                (g, if s <= constraints.cutoff { 1.0 } else { 0.0 })
            };
            [
                z.re,
                z.im,
                if p == q { 1.0 } else { 0.0 },
                within,
                g.re,
                g.im,
                s.min(5.0) / 5.0,
                gap(p, false),
                gap(p, true),
                gap(q, false),
                gap(q, true),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub hidden: usize,
    pub lstm_layers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_floor: f64,
    pub clip_norm: Option<f64>,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub constraints: SpacingConstraints,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            hidden: 32,
            lstm_layers: 2,
            epochs: 300,
            batch_size: 8,
            learning_rate: 2e-3,
            lr_floor: 0.01,
            clip_norm: Some(5.0),
            holdout_fraction: 0.2,
            seed: 42,
            constraints: SpacingConstraints::default(),
        }
    }
}

/// Refinement network plus the constants it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SynthesisFile", try_from = "SynthesisFile")]
pub struct SynthesisModel {
    pub lstm: LstmParams,
    /// Ohms per network unit for priors and residuals.
    pub scale: f64,
    pub constraints: SpacingConstraints,
    /// Hash of the two-port bundle used for the priors.
    pub two_port_hash: String,
    pub seed: u64,
    pub optimizer: AdamConfig,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct SynthesisFile {
    #[serde(flatten)]
    checkpoint: Checkpoint,
    synthesis: SynthesisMeta,
}

#[derive(Clone, Serialize, Deserialize)]
struct SynthesisMeta {
    scale: f64,
    constraints: SpacingConstraints,
    two_port_hash: String,
}

impl From<SynthesisModel> for SynthesisFile {
    fn from(m: SynthesisModel) -> Self {
        let mut layers: Vec<LayerRecord> = m
            .lstm
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| LayerRecord {
                name: format!("lstm{i}"),
                kind: "lstm".into(),
                shape: [l.weights.rows, l.weights.cols],
                activation: None,
                weights: l.weights.data.clone(),
                bias: l.bias.clone(),
            })
            .collect();
        layers.push(LayerRecord::dense("head", &m.lstm.head));
        SynthesisFile {
            checkpoint: Checkpoint {
                schema_version: CHECKPOINT_SCHEMA_VERSION,
                seed: m.seed,
                layers,
                optimizer: m.optimizer,
                epoch: m.epoch,
                loss: m.loss,
            },
            synthesis: SynthesisMeta {
                scale: m.scale,
                constraints: m.constraints,
                two_port_hash: m.two_port_hash,
            },
        }
    }
}

impl TryFrom<SynthesisFile> for SynthesisModel {
    type Error = Error;

    fn try_from(f: SynthesisFile) -> Result<Self> {
        let ck = f.checkpoint;
        ck.check_version()?;
        let layers = ck
            .layers
            .iter()
            .filter(|l| l.kind == "lstm")
            .map(|r| {
                let hidden = r.shape[0] / 4;
                if r.shape[0] % 4 != 0 || r.bias.len() != r.shape[0] || r.shape[1] <= hidden {
                    return Err(Error::Model(format!(
                        "layer {} has inconsistent shapes",
                        r.name
                    )));
                }
                Ok(LstmLayer {
                    weights: r.weight_tensor()?,
                    bias: r.bias.clone(),
                    hidden,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let lstm = LstmParams {
            layers,
            head: ck.layer("head")?.to_dense()?,
        };
        lstm.validate()?;
        if lstm.inputs() != TOKEN_WIDTH || lstm.head.outputs() != 2 {
            return Err(Error::Model(
                "refinement network has the wrong token or output width".into(),
            ));
        }
        Ok(SynthesisModel {
            lstm,
            scale: f.synthesis.scale,
            constraints: f.synthesis.constraints,
            two_port_hash: f.synthesis.two_port_hash,
            seed: ck.seed,
            optimizer: ck.optimizer,
            epoch: ck.epoch,
            loss: ck.loss,
        })
    }
}

impl SynthesisModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedMatrix {
    /// Upper-triangle real parts then imaginary parts.
    pub packed: Vec<f64>,
    /// Exactly symmetric M x M matrix.
    pub reconstructed: CMatrix,
    /// Packed pairwise prior before refinement.
    pub prior: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Stacks per-sample token sequences into one LSTM input per position.
fn batch_sequence(batch: &[&[[f64; TOKEN_WIDTH]]]) -> Vec<Tensor2> {
    let t_len = batch[0].len();
    (0..t_len)
        .map(|t| Tensor2::from_fn(TOKEN_WIDTH, batch.len(), |r, b| batch[b][t][r]))
        .collect()
}

/// Residuals (in scale units) for every token: 2 x (T * B), column t * B + b.
fn refine_forward(
    lstm: &LstmParams,
    batch: &[&[[f64; TOKEN_WIDTH]]],
) -> Result<(crate::pc_lstm::LstmRecord, crate::nn::DenseRecord)> {
    let seq = batch_sequence(batch);
    let rec = lstm_forward_batch(lstm, &seq)?;
    let b = batch.len();
    let h = lstm.top_hidden();
    let stacked = Tensor2::from_fn(h, seq.len() * b, |r, c| rec.top[c / b].get(r, c % b));
    let head = lstm.head.forward_matrix(&stacked)?;
    Ok((rec, head))
}

/// Refined packed vector from a prior, by adding scaled residuals.
fn apply_residuals(
    prior: &CMatrix,
    residual: &Tensor2,
    b: usize,
    col: usize,
    scale: f64,
) -> Vec<f64> {
    let mut packed = pack_upper(prior).expect("prior is square");
    let half = packed.len() / 2;
    for k in 0..half {
        packed[k] += scale * residual.get(0, k * b + col);
        packed[half + k] += scale * residual.get(1, k * b + col);
    }
    packed
}

/// Synthesizes the port impedance matrix of `geometry`. Two-element arrays return the
/// two-port prediction unchanged; larger arrays are refined when `model` is given.
pub fn synthesize_array(
    bundle: &ModelBundle,
    model: Option<&SynthesisModel>,
    geometry: &ArrayGeometry,
    constraints: &SpacingConstraints,
) -> Result<SynthesizedMatrix> {
    let prior = assemble_prior(bundle, geometry, constraints)?;
    let prior_packed = pack_upper(&prior.matrix)?;
    let m = geometry.element_count();
    let packed = match model {
        Some(model) if m > 2 => {
            if model.epoch == 0 {
                return Err(Error::Model(
                    "refinement network is untrained (0 epochs)".into(),
                ));
            }
            let tok = tokens(geometry, &prior.matrix, model.scale, constraints);
            let (_, head) = refine_forward(&model.lstm, &[&tok])?;
            apply_residuals(&prior.matrix, &head.output, 1, 0, model.scale)
        }
        _ => prior_packed.clone(),
    };
    let reconstructed = super::packing::unpack_upper(m, &packed)?;
    Ok(SynthesizedMatrix {
        packed,
        reconstructed,
        prior: prior_packed,
        warnings: prior.warnings,
    })
}

/// RMS(pred - true) / RMS(true) over two packed vectors.
pub fn normalized_rms(pred: &[f64], truth: &[f64]) -> f64 {
    let err: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = truth.iter().map(|b| b * b).sum();
    (err / norm).sqrt()
}

/// Per-size loss entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeLoss {
    pub elements: usize,
    /// sum (pred - true)^2 / sum true^2 over the packed entries.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisEpoch {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean batch loss for each array size, in the order the datasets were given.
    pub losses: Vec<SizeLoss>,
}

pub fn synthesis_history_csv(history: &[SynthesisEpoch]) -> String {
    let mut out = String::from("epoch,learning_rate");
    if let Some(h) = history.first() {
        for l in &h.losses {
            out.push_str(&format!(",loss_m{}", l.elements));
        }
    }
    out.push('\n');
    for h in history {
        out.push_str(&format!("{},{:.17e}", h.epoch, h.learning_rate));
        for l in &h.losses {
            out.push_str(&format!(",{:.17e}", l.loss));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisTraining {
    pub model: SynthesisModel,
    pub history: Vec<SynthesisEpoch>,
    /// (train, holdout) indices for each dataset.
    pub splits: Vec<(Vec<usize>, Vec<usize>)>,
    /// Loss over each training split after the last update.
    pub final_losses: Vec<SizeLoss>,
}

/// Frozen inputs and targets of one layout.
struct Prepared {
    tokens: Vec<[f64; TOKEN_WIDTH]>,
    prior: CMatrix,
    /// Packed MoM target.
    truth: Vec<f64>,
    /// (truth - prior) / scale, packed.
    residual: Vec<f64>,
}

fn prepare(
    bundle: &ModelBundle,
    sample: &Sample,
    scale: f64,
    constraints: &SpacingConstraints,
) -> Result<Prepared> {
    let prior = assemble_prior(bundle, &sample.geometry, constraints)?.matrix;
    let truth = pack_upper(&sample.z_port.entries)?;
    let prior_packed = pack_upper(&prior)?;
    let residual = truth
        .iter()
        .zip(&prior_packed)
        .map(|(t, p)| (t - p) / scale)
        .collect();
    Ok(Prepared {
        tokens: tokens(&sample.geometry, &prior, scale, constraints),
        prior,
        truth,
        residual,
    })
}

struct RefineGrads {
    lstm: Vec<(Tensor2, Vec<f64>)>,
    head: (Tensor2, Vec<f64>),
}

/// Normalized loss sum (pred - true)^2 / sum true^2 of one batch and its gradient.
fn refine_gradients(
    lstm: &LstmParams,
    batch: &[&Prepared],
    scale: f64,
) -> Result<(f64, RefineGrads)> {
    let toks: Vec<&[[f64; TOKEN_WIDTH]]> = batch.iter().map(|p| p.tokens.as_slice()).collect();
    let (rec, head) = refine_forward(lstm, &toks)?;
    let b = batch.len();
    let t_len = toks[0].len();
    let denom: f64 = batch
        .iter()
        .map(|p| p.truth.iter().map(|v| (v / scale).powi(2)).sum::<f64>())
        .sum();
    let y = &head.output;
    let mut d_y = Tensor2::zeros(2, t_len * b);
    let mut err = 0.0;
    for (bi, p) in batch.iter().enumerate() {
        for t in 0..t_len {
            for c in 0..2 {
                let e = y.get(c, t * b + bi) - p.residual[c * t_len + t];
                err += e * e;
                d_y.set(c, t * b + bi, 2.0 * e / denom);
            }
        }
    }
    let hg = lstm.head.backward(&head, &d_y)?;
    let h = lstm.top_hidden();
    let d_top: Vec<Tensor2> = (0..t_len)
        .map(|t| Tensor2::from_fn(h, b, |r, c| hg.input.get(r, t * b + c)))
        .collect();
    let lg = lstm_backward(lstm, &rec, &d_top)?;
    Ok((
        err / denom,
        RefineGrads {
            lstm: lg.layers,
            head: (hg.weights, hg.bias),
        },
    ))
}

fn clip(grads: &mut RefineGrads, max_norm: f64) {
    let mut sq = 0.0;
    for (w, b) in grads.lstm.iter().chain(std::iter::once(&grads.head)) {
        sq += w.data.iter().chain(b).map(|v| v * v).sum::<f64>();
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for (w, b) in grads
            .lstm
            .iter_mut()
            .chain(std::iter::once(&mut grads.head))
        {
            w.data.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= s);
        }
    }
}

fn slots<'a>(lstm: &'a mut LstmParams, g: &'a RefineGrads) -> Vec<ParamSlot<'a>> {
    let mut out = Vec::new();
    for (i, (l, (gw, gb))) in lstm.layers.iter_mut().zip(&g.lstm).enumerate() {
        out.push(ParamSlot::new(
            format!("lstm{i}.weights"),
            &mut l.weights.data,
            &gw.data,
        ));
        out.push(ParamSlot::new(format!("lstm{i}.bias"), &mut l.bias, gb));
    }
    out.push(ParamSlot::new(
        "head.weights",
        &mut lstm.head.weights.data,
        &g.head.0.data,
    ));
    out.push(ParamSlot::new("head.bias", &mut lstm.head.bias, &g.head.1));
    out
}

fn loss_over(
    lstm: &LstmParams,
    prepared: &[Prepared],
    batch_size: usize,
    scale: f64,
) -> Result<f64> {
    let (mut err, mut norm) = (0.0, 0.0);
    for chunk in prepared.chunks(batch_size) {
        let toks: Vec<&[[f64; TOKEN_WIDTH]]> = chunk.iter().map(|p| p.tokens.as_slice()).collect();
        let (_, head) = refine_forward(lstm, &toks)?;
        for (bi, p) in chunk.iter().enumerate() {
            let pred = apply_residuals(&p.prior, &head.output, chunk.len(), bi, scale);
            err += pred
                .iter()
                .zip(&p.truth)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
            norm += p.truth.iter().map(|v| v * v).sum::<f64>();
        }
    }
    Ok(err / norm)
}

/// Trains one refinement network across all given array sizes (one dataset per size).
pub fn train_synthesis(
    bundle: &ModelBundle,
    datasets: &[&[Sample]],
    config: &SynthesisConfig,
) -> Result<SynthesisTraining> {
    if datasets.is_empty() || datasets.iter().any(|d| d.is_empty()) {
        return Err(Error::domain("synthesis training needs non-empty datasets"));
    }
    if config.batch_size == 0 || config.hidden == 0 || config.lstm_layers == 0 {
        return Err(Error::domain(
            "batch size, hidden width and layer count must be positive",
        ));
    }
    let mut sizes = Vec::with_capacity(datasets.len());
    for d in datasets {
        let m = d[0].geometry.element_count();
        if m < 3 || d.iter().any(|s| s.geometry.element_count() != m) {
            return Err(Error::domain(
                "each dataset must hold layouts of one size with at least 3 elements",
            ));
        }
        sizes.push(m);
    }
    let mut splits = Vec::with_capacity(datasets.len());
    for (k, d) in datasets.iter().enumerate() {
        splits.push(split_indices(
            d.len(),
            config.holdout_fraction,
            config.seed.wrapping_add(k as u64),
        )?);
    }
    let (mut sq, mut count) = (0.0, 0usize);
    for (d, (train, _)) in datasets.iter().zip(&splits) {
        for &i in train {
            let v = pack_upper(&d[i].z_port.entries)?;
            sq += v.iter().map(|x| x * x).sum::<f64>();
            count += v.len();
        }
    }
    let scale = (sq / count as f64).sqrt();
    let prepared: Vec<Vec<Prepared>> = datasets
        .iter()
        .zip(&splits)
        .map(|(d, (train, _))| {
            train
                .iter()
                .map(|&i| prepare(bundle, &d[i], scale, &config.constraints))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut lstm = LstmParams::init(&mut rng, TOKEN_WIDTH, config.hidden, config.lstm_layers, 2);
    let optimizer = AdamConfig::with_learning_rate(config.learning_rate);
    let mut adam = Adam::new(optimizer)?;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = cosine_learning_rate(config.learning_rate, config.lr_floor, epoch, config.epochs);
        adam.set_learning_rate(lr);
        let mut batches: Vec<(usize, Vec<usize>)> = Vec::new();
        for (k, set) in prepared.iter().enumerate() {
            let mut order: Vec<usize> = (0..set.len()).collect();
            order.shuffle(&mut rng);
            batches.extend(order.chunks(config.batch_size).map(|c| (k, c.to_vec())));
        }
        batches.shuffle(&mut rng);
        let mut sums = vec![(0.0, 0usize); prepared.len()];
        for (k, idx) in &batches {
            let batch: Vec<&Prepared> = idx.iter().map(|&i| &prepared[*k][i]).collect();
            let (loss, mut grads) = refine_gradients(&lstm, &batch, scale)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    detail: format!("loss is not finite ({loss})"),
                });
            }
            if let Some(c) = config.clip_norm {
                clip(&mut grads, c);
            }
            adam.step(&mut slots(&mut lstm, &grads))
                .map_err(|e| match e {
                    Error::Training { detail, .. } => Error::Training { epoch, detail },
                    other => other,
                })?;
            sums[*k].0 += loss;
            sums[*k].1 += 1;
        }
        history.push(SynthesisEpoch {
            epoch,
            learning_rate: lr,
            losses: sizes
                .iter()
                .zip(&sums)
                .map(|(&elements, &(s, n))| SizeLoss {
                    elements,
                    loss: s / n as f64,
                })
                .collect(),
        });
    }
    let final_losses = sizes
        .iter()
        .zip(&prepared)
        .map(|(&elements, set)| {
            Ok(SizeLoss {
                elements,
                loss: loss_over(&lstm, set, config.batch_size, scale)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if final_losses.iter().any(|l| !l.loss.is_finite()) {
        return Err(Error::Training {
            epoch: config.epochs,
            detail: "final loss is not finite".into(),
        });
    }
    let model = SynthesisModel {
        lstm,
        scale,
        constraints: config.constraints,
        two_port_hash: bundle.hash()?,
        seed: config.seed,
        optimizer,
        epoch: config.epochs,
        loss: final_losses.iter().map(|l| l.loss).fold(0.0, f64::max),
    };
    Ok(SynthesisTraining {
        model,
        history,
        splits,
        final_losses,
    })
}

/// Normalized RMS of the synthesized packed vector against each sample's MoM target.
pub fn synthesis_errors(
    bundle: &ModelBundle,
    model: &SynthesisModel,
    samples: &[Sample],
) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            let out = synthesize_array(bundle, Some(model), &s.geometry, &model.constraints)?;
            Ok(normalized_rms(&out.packed, &pack_upper(&s.z_port.entries)?))
        })
        .collect()
}
