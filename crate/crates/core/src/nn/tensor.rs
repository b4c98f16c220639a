use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `a * b` for an m x k operand `a` and a k x n operand `b`, each read through
/// (row stride, column stride) so transposes need no copy.
fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &Tensor2,
    (rsa, csa): (usize, usize),
    b: &Tensor2,
    (rsb, csb): (usize, usize),
) -> Tensor2 {
    let mut out = Tensor2::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    if n == 1 && csa == 1 {
        // Matrix-vector product: packing would cost as much as the product itself.
        let x: Vec<f64> = (0..k).map(|j| b.data[j * rsb]).collect();
        for (i, o) in out.data.iter_mut().enumerate() {
            *o = dot(&a.data[i * rsa..i * rsa + k], &x);
        }
        return out;
    }
    // SAFETY: the strides address exactly the m x k and k x n elements held by `a` and
    // `b`, and `out` is an owned m x n row-major buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa as isize,
            csa as isize,
            b.data.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::shape(format!(
                "{rows}x{cols} tensor from {} values",
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor2 { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Tensor2::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    /// A single column.
    pub fn column_vector(v: &[f64]) -> Self {
        Tensor2 {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Tensor2 {
        Tensor2::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same(&self, other: &Tensor2, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "{op}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor2) -> Result<Tensor2> {
        self.check_same(other, "add")?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Tensor2) -> Result<Tensor2> {
        self.check_same(other, "sub")?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Tensor2) -> Result<Tensor2> {
        self.check_same(other, "hadamard")?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    pub fn add_assign(&mut self, other: &Tensor2) -> Result<()> {
        self.check_same(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, other: &Tensor2, f: impl Fn(f64, f64) -> f64) -> Tensor2 {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// self * other.
    pub fn matmul(&self, other: &Tensor2) -> Result<Tensor2> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "matmul {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(gemm(
            (self.rows, self.cols, other.cols),
            self,
            (self.cols, 1),
            other,
            (other.cols, 1),
        ))
    }

    /// self^T * other.
    pub fn t_matmul(&self, other: &Tensor2) -> Result<Tensor2> {
        if self.rows != other.rows {
            return Err(Error::shape(format!(
                "t_matmul {:?}^T x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(gemm(
            (self.cols, self.rows, other.cols),
            self,
            (1, self.cols),
            other,
            (other.cols, 1),
        ))
    }

    /// self * other^T.
    pub fn matmul_t(&self, other: &Tensor2) -> Result<Tensor2> {
        if self.cols != other.cols {
            return Err(Error::shape(format!(
                "matmul_t {:?} x {:?}^T",
                self.shape(),
                other.shape()
            )));
        }
        Ok(gemm(
            (self.rows, self.cols, other.rows),
            self,
            (self.cols, 1),
            other,
            (1, other.cols),
        ))
    }

    /// Sum over columns: one value per row.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    /// Stack vertically.
    pub fn vstack(top: &Tensor2, bottom: &Tensor2) -> Result<Tensor2> {
        if top.cols != bottom.cols {
            return Err(Error::shape(format!(
                "vstack {:?} over {:?}",
                top.shape(),
                bottom.shape()
            )));
        }
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        Ok(Tensor2 {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    /// Rows `start..end`.
    pub fn rows_slice(&self, start: usize, end: usize) -> Tensor2 {
        Tensor2 {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
