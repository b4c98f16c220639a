use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Input gradient of softmax given its output `y`.
pub fn softmax_backward(y: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if y.len() != upstream.len() {
        return Err(Error::shape(format!(
            "softmax output {} vs upstream {}",
            y.len(),
            upstream.len()
        )));
    }
    let dot: f64 = y.iter().zip(upstream).map(|(a, b)| a * b).sum();
    Ok(y.iter()
        .zip(upstream)
        .map(|(yi, gi)| yi * (gi - dot))
        .collect())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "mse over {} vs {} values",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::shape("mse of empty vectors"));
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

/// d mse / d pred.
pub fn mse_gradient(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::shape(format!(
            "mse gradient over {} vs {} values",
            pred.len(),
            target.len()
        )));
    }
    let s = 2.0 / pred.len() as f64;
    Ok(pred.iter().zip(target).map(|(p, t)| s * (p - t)).collect())
}

fn check_conv(input: &Tensor2, kernel: &Tensor2) -> Result<()> {
    if kernel.rows != kernel.cols || kernel.rows % 2 == 0 {
        return Err(Error::shape(format!(
            "kernel must be square with odd side, got {:?}",
            kernel.shape()
        )));
    }
    if kernel.rows > input.rows || kernel.cols > input.cols {
        return Err(Error::shape(format!(
            "kernel {:?} larger than input {:?}",
            kernel.shape(),
            input.shape()
        )));
    }
    Ok(())
}

/// Valid-mode correlation: out[i][j] = sum_ab input[i+a][j+b] kernel[a][b].
pub fn conv2d(input: &Tensor2, kernel: &Tensor2) -> Result<Tensor2> {
    check_conv(input, kernel)?;
    let k = kernel.rows;
    let (or, oc) = (input.rows - k + 1, input.cols - k + 1);
    let mut out = Tensor2::zeros(or, oc);
    for a in 0..k {
        for b in 0..k {
            let w = kernel.get(a, b);
            for i in 0..or {
                let src = &input.data[(i + a) * input.cols + b..(i + a) * input.cols + b + oc];
                let dst = &mut out.data[i * oc..(i + 1) * oc];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `conv2d` with respect to (input, kernel).
pub fn conv2d_backward(
    input: &Tensor2,
    kernel: &Tensor2,
    upstream: &Tensor2,
) -> Result<(Tensor2, Tensor2)> {
    check_conv(input, kernel)?;
    let k = kernel.rows;
    let (or, oc) = (input.rows - k + 1, input.cols - k + 1);
    if upstream.shape() != (or, oc) {
        return Err(Error::shape(format!(
            "upstream {:?} for conv output {:?}",
            upstream.shape(),
            (or, oc)
        )));
    }
    let mut d_input = Tensor2::zeros(input.rows, input.cols);
    let mut d_kernel = Tensor2::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let w = kernel.get(a, b);
            let mut acc = 0.0;
            for i in 0..or {
                for j in 0..oc {
                    let g = upstream.get(i, j);
                    acc += g * input.get(i + a, j + b);
                    d_input.data[(i + a) * input.cols + j + b] += g * w;
                }
            }
            d_kernel.set(a, b, acc);
        }
    }
    Ok((d_input, d_kernel))
}
