//! Attention fusion of the real and imaginary Green feature maps.
//!
//! X'_r = ReLU(W_r X_r + b_r), X'_i = ReLU(W_i X_i + b_i) applied column-wise,
//! logits = W_a [X'_r; X'_i] + b_a, and a softmax over each position's
//! (real, imaginary) logit pair gives X_fused = a_r X'_r + a_i X'_i.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseGrads, DenseLayer, DenseRecord, Tensor2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub map_r: DenseLayer,
    pub map_i: DenseLayer,
    /// 2S -> 2S; rows 0..S are real logits, rows S..2S imaginary logits.
    pub attn: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatures {
    pub matrix: Tensor2,
    pub alpha_r: Tensor2,
    pub alpha_i: Tensor2,
}

/// Forward intermediates consumed by `fusion_grads`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionRecord {
    pub map_r: DenseRecord,
    pub map_i: DenseRecord,
    pub attn: DenseRecord,
    pub fused: FusedFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionGrads {
    pub map_r: DenseGrads,
    pub map_i: DenseGrads,
    pub attn: DenseGrads,
    pub input_r: Tensor2,
    pub input_i: Tensor2,
}

impl FusionParams {
    pub fn new(map_r: DenseLayer, map_i: DenseLayer, attn: DenseLayer) -> Result<Self> {
        let s = map_r.inputs();
        let square = |l: &DenseLayer, n: usize| l.inputs() == n && l.outputs() == n;
        if !square(&map_r, s) || !square(&map_i, s) || !square(&attn, 2 * s) {
            return Err(Error::shape(format!(
                "fusion layers must be {s}x{s}, {s}x{s} and {0}x{0}",
                2 * s
            )));
        }
        Ok(FusionParams { map_r, map_i, attn })
    }

    /// Glorot-initialized maps for an S x S grid.
    pub fn init(rng: &mut impl Rng, side: usize) -> Self {
        FusionParams {
            map_r: DenseLayer::init(rng, side, side, Activation::ReLU),
            map_i: DenseLayer::init(rng, side, side, Activation::ReLU),
            attn: DenseLayer::init(rng, 2 * side, 2 * side, Activation::Identity),
        }
    }

    pub fn side(&self) -> usize {
        self.map_r.inputs()
    }
}

/// Per-position softmax over the two logits; returns (a_r, a_i).
fn pair_softmax(logits: &Tensor2, side: usize) -> (Tensor2, Tensor2) {
    let cols = logits.cols;
    let mut a_r = Tensor2::zeros(side, cols);
    let mut a_i = Tensor2::zeros(side, cols);
    for k in 0..side * cols {
        let (lr, li) = (logits.data[k], logits.data[side * cols + k]);
        let m = lr.max(li);
        let (er, ei) = ((lr - m).exp(), (li - m).exp());
        a_r.data[k] = er / (er + ei);
        a_i.data[k] = ei / (er + ei);
    }
    (a_r, a_i)
}

pub fn fuse(x_r: &Tensor2, x_i: &Tensor2, params: &FusionParams) -> Result<FusionRecord> {
    if x_r.shape() != x_i.shape() {
        return Err(Error::shape(format!(
            "real {:?} vs imaginary {:?}",
            x_r.shape(),
            x_i.shape()
        )));
    }
    let s = params.side();
    if x_r.rows != s {
        return Err(Error::shape(format!(
            "fusion built for {s} rows, got {}",
            x_r.rows
        )));
    }
    let map_r = params.map_r.forward_matrix(x_r)?;
    let map_i = params.map_i.forward_matrix(x_i)?;
    let attn = params
        .attn
        .forward_matrix(&Tensor2::vstack(&map_r.output, &map_i.output)?)?;
    let (alpha_r, alpha_i) = pair_softmax(&attn.output, s);
    let matrix = alpha_r
        .hadamard(&map_r.output)?
        .add(&alpha_i.hadamard(&map_i.output)?)?;
    Ok(FusionRecord {
        map_r,
        map_i,
        attn,
        fused: FusedFeatures {
            matrix,
            alpha_r,
            alpha_i,
        },
    })
}

pub fn fusion_grads(
    params: &FusionParams,
    record: &FusionRecord,
    upstream: &Tensor2,
) -> Result<FusionGrads> {
    let f = &record.fused;
    if upstream.shape() != f.matrix.shape() {
        return Err(Error::shape(format!(
            "upstream {:?} for fused {:?}",
            upstream.shape(),
            f.matrix.shape()
        )));
    }
    let (xr, xi) = (&record.map_r.output, &record.map_i.output);
    let mut d_xr = upstream.hadamard(&f.alpha_r)?;
    let mut d_xi = upstream.hadamard(&f.alpha_i)?;
    let n = upstream.data.len();
    let mut d_logits = Tensor2::zeros(2 * upstream.rows, upstream.cols);
    for k in 0..n {
        let (ar, ai) = (f.alpha_r.data[k], f.alpha_i.data[k]);
        let (gr, gi) = (upstream.data[k] * xr.data[k], upstream.data[k] * xi.data[k]);
        let dot = ar * gr + ai * gi;
        d_logits.data[k] = ar * (gr - dot);
        d_logits.data[n + k] = ai * (gi - dot);
    }
    let attn = params.attn.backward(&record.attn, &d_logits)?;
    let s = upstream.rows;
    d_xr.add_assign(&attn.input.rows_slice(0, s))?;
    d_xi.add_assign(&attn.input.rows_slice(s, 2 * s))?;
    let map_r = params.map_r.backward(&record.map_r, &d_xr)?;
    let map_i = params.map_i.backward(&record.map_i, &d_xi)?;
    Ok(FusionGrads {
        input_r: map_r.input.clone(),
        input_i: map_i.input.clone(),
        map_r,
        map_i,
        attn,
    })
}
