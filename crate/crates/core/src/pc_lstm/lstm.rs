//! Stacked LSTM with gate order (forget, input, output, candidate) and
//! pre-activations W [h_{t-1}; g_t] + b, plus a dense output head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{glorot_uniform, sigmoid, Activation, DenseLayer, Tensor2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    /// 4H x (H + inputs).
    pub weights: Tensor2,
    /// 4H.
    pub bias: Vec<f64>,
    pub hidden: usize,
}

impl LstmLayer {
    pub fn init(rng: &mut impl Rng, inputs: usize, hidden: usize) -> Self {
        let mut bias = vec![0.0; 4 * hidden];
        // Forget gate starts open.
        bias[..hidden].fill(1.0);
        LstmLayer {
            weights: glorot_uniform(rng, 4 * hidden, hidden + inputs),
            bias,
            hidden,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols - self.hidden
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub layers: Vec<LstmLayer>,
    pub head: DenseLayer,
}

impl LstmParams {
    pub fn init(
        rng: &mut impl Rng,
        inputs: usize,
        hidden: usize,
        layers: usize,
        outputs: usize,
    ) -> Self {
        let mut stack = Vec::with_capacity(layers);
        for l in 0..layers {
            stack.push(LstmLayer::init(
                rng,
                if l == 0 { inputs } else { hidden },
                hidden,
            ));
        }
        LstmParams {
            layers: stack,
            head: DenseLayer::init(rng, hidden, outputs, Activation::Identity),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::shape("LSTM needs at least one layer"));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let h = layer.hidden;
            if layer.weights.rows != 4 * h || layer.bias.len() != 4 * h || layer.weights.cols <= h {
                return Err(Error::shape(format!(
                    "LSTM layer {l} has inconsistent shapes"
                )));
            }
            if l > 0 && layer.inputs() != self.layers[l - 1].hidden {
                return Err(Error::shape(format!(
                    "LSTM layer {l} input width != previous hidden width"
                )));
            }
        }
        if self.head.inputs() != self.top_hidden() {
            return Err(Error::shape("output head width != top hidden width"));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn top_hidden(&self) -> usize {
        self.layers.last().map_or(0, |l| l.hidden)
    }
}

/// Everything one layer-step needs for backpropagation; matrices are H x B.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x: Tensor2,
    pub f: Tensor2,
    pub i: Tensor2,
    pub o: Tensor2,
    pub g: Tensor2,
    pub c_prev: Tensor2,
    pub tanh_c: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmRecord {
    /// [layer][time].
    pub steps: Vec<Vec<StepRecord>>,
    /// Top-layer hidden state at every time step.
    pub top: Vec<Tensor2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    /// (weights, bias) per layer.
    pub layers: Vec<(Tensor2, Vec<f64>)>,
    /// Gradient with respect to each input g_t.
    pub inputs: Vec<Tensor2>,
}

fn cell(
    layer: &LstmLayer,
    input: &Tensor2,
    h_prev: &Tensor2,
    c_prev: &Tensor2,
) -> Result<(Tensor2, Tensor2, StepRecord)> {
    let h = layer.hidden;
    if input.rows != layer.inputs() || h_prev.rows != h || c_prev.rows != h {
        return Err(Error::shape(format!(
            "LSTM step expects {} inputs and {h} state rows, got {}, {}, {}",
            layer.inputs(),
            input.rows,
            h_prev.rows,
            c_prev.rows
        )));
    }
    if input.cols != h_prev.cols || input.cols != c_prev.cols {
        return Err(Error::shape("LSTM batch widths differ"));
    }
    let b = input.cols;
    let x = Tensor2::vstack(h_prev, input)?;
    let z = layer.weights.matmul(&x)?;
    let gate = |k: usize, f: fn(f64) -> f64| {
        let mut t = z.rows_slice(k * h, (k + 1) * h);
        for r in 0..h {
            let bias = layer.bias[k * h + r];
            for v in &mut t.data[r * b..(r + 1) * b] {
                *v = f(*v + bias);
            }
        }
        t
    };
    let f = gate(0, sigmoid);
    let i = gate(1, sigmoid);
    let o = gate(2, sigmoid);
    let g = gate(3, f64::tanh);
    let c = f.hadamard(c_prev)?.add(&i.hadamard(&g)?)?;
    let tanh_c = c.map(f64::tanh);
    let h_new = o.hadamard(&tanh_c)?;
    Ok((
        h_new,
        c,
        StepRecord {
            x,
            f,
            i,
            o,
            g,
            c_prev: c_prev.clone(),
            tanh_c,
        },
    ))
}

/// One cell update of `layer`: returns (h_t, c_t).
pub fn lstm_step(
    params: &LstmParams,
    layer: usize,
    g_t: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = params
        .layers
        .get(layer)
        .ok_or_else(|| Error::shape(format!("no LSTM layer {layer}")))?;
    let (h, c, _) = cell(
        l,
        &Tensor2::column_vector(g_t),
        &Tensor2::column_vector(h_prev),
        &Tensor2::column_vector(c_prev),
    )?;
    Ok((h.data, c.data))
}

/// Runs the whole stack over a batched sequence from zero state.
pub fn lstm_forward_batch(params: &LstmParams, sequence: &[Tensor2]) -> Result<LstmRecord> {
    if sequence.is_empty() {
        return Err(Error::shape("LSTM sequence is empty"));
    }
    params.validate()?;
    let b = sequence[0].cols;
    let mut current: Vec<Tensor2> = sequence.to_vec();
    let mut steps = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let mut h = Tensor2::zeros(layer.hidden, b);
        let mut c = Tensor2::zeros(layer.hidden, b);
        let mut records = Vec::with_capacity(current.len());
        let mut outputs = Vec::with_capacity(current.len());
        for input in &current {
            let (h_new, c_new, rec) = cell(layer, input, &h, &c)?;
            outputs.push(h_new.clone());
            records.push(rec);
            h = h_new;
            c = c_new;
        }
        steps.push(records);
        current = outputs;
    }
    Ok(LstmRecord {
        steps,
        top: current,
    })
}

/// Final top-layer hidden state for a single (unbatched) sequence.
pub fn lstm_forward(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<Vec<f64>> {
    let seq: Vec<Tensor2> = sequence.iter().map(|g| Tensor2::column_vector(g)).collect();
    let rec = lstm_forward_batch(params, &seq)?;
    Ok(rec.top.last().expect("non-empty sequence").data.clone())
}

/// BPTT given the loss gradient with respect to the top hidden state at every step.
pub fn lstm_backward(
    params: &LstmParams,
    record: &LstmRecord,
    d_top: &[Tensor2],
) -> Result<LstmGrads> {
    let t_len = record.top.len();
    if d_top.len() != t_len {
        return Err(Error::shape(format!(
            "{} upstream steps for a length-{t_len} sequence",
            d_top.len()
        )));
    }
    if record.steps.len() != params.layers.len() {
        return Err(Error::shape("record does not match the LSTM stack"));
    }
    let mut upstream: Vec<Tensor2> = d_top.to_vec();
    let mut layer_grads = vec![(Tensor2::zeros(0, 0), Vec::new()); params.layers.len()];
    for (l, layer) in params.layers.iter().enumerate().rev() {
        let h = layer.hidden;
        let steps = &record.steps[l];
        let b = steps[0].f.cols;
        let mut dw = Tensor2::zeros(layer.weights.rows, layer.weights.cols);
        let mut db = vec![0.0; 4 * h];
        let mut dh_next = Tensor2::zeros(h, b);
        let mut dc_next = Tensor2::zeros(h, b);
        let mut d_inputs = vec![Tensor2::zeros(0, 0); t_len];
        for t in (0..t_len).rev() {
            let s = &steps[t];
            if upstream[t].shape() != (h, b) {
                return Err(Error::shape(format!(
                    "upstream step {t} has shape {:?}",
                    upstream[t].shape()
                )));
            }
            let dh = upstream[t].add(&dh_next)?;
            let mut dz = Tensor2::zeros(4 * h, b);
            let mut dc_prev = Tensor2::zeros(h, b);
            for k in 0..h * b {
                let (f, i, o, g, tc) = (
                    s.f.data[k],
                    s.i.data[k],
                    s.o.data[k],
                    s.g.data[k],
                    s.tanh_c.data[k],
                );
                let dhk = dh.data[k];
                let dc = dc_next.data[k] + dhk * o * (1.0 - tc * tc);
                dz.data[k] = dc * s.c_prev.data[k] * f * (1.0 - f);
                dz.data[h * b + k] = dc * g * i * (1.0 - i);
                dz.data[2 * h * b + k] = dhk * tc * o * (1.0 - o);
                dz.data[3 * h * b + k] = dc * i * (1.0 - g * g);
                dc_prev.data[k] = dc * f;
            }
            dw.add_assign(&dz.matmul_t(&s.x)?)?;
            for (acc, v) in db.iter_mut().zip(dz.row_sums()) {
                *acc += v;
            }
            let dx = layer.weights.t_matmul(&dz)?;
            dh_next = dx.rows_slice(0, h);
            d_inputs[t] = dx.rows_slice(h, dx.rows);
            dc_next = dc_prev;
        }
        layer_grads[l] = (dw, db);
        upstream = d_inputs;
    }
    Ok(LstmGrads {
        layers: layer_grads,
        inputs: upstream,
    })
}
