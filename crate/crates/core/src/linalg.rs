//! Dense complex matrices and a partially pivoted LU factorisation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::shape(format!(
                "matrix has {} columns, vector {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max |A_ij - A_ji| / max |A|; zero for an exactly symmetric matrix.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        worst / scale
    }

    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn lu(&self) -> Result<LuFactors> {
        LuFactors::new(self)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.lu()?.inverse()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// PA = LU with unit-diagonal L stored below the diagonal.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl LuFactors {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let norm1 = a.norm1();
        for k in 0..n {
            let (mut piv, mut best) = (k, 0.0);
            for r in k..n {
                let v = lu[r * n + k].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Solver {
                    reason: format!("zero pivot in column {k}"),
                    condition: f64::INFINITY,
                });
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..(k + 1) * n];
            for r in 0..(n - k - 1) {
                let row = &mut bottom[r * n..(r + 1) * n];
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor == ZERO {
                    continue;
                }
                for c in (k + 1)..n {
                    row[c] -= factor * pivot_row[c];
                }
            }
        }
        Ok(LuFactors { n, lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::shape(format!(
                "rhs length {} for system of size {n}",
                b.len()
            )));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }

    /// Solves A^T x = b.
    pub fn solve_transpose(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::shape(format!(
                "rhs length {} for system of size {n}",
                b.len()
            )));
        }
        // A^T = U^T L^T P, so solve U^T y = b, L^T w = y, x = P^T w.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.rows != self.n {
            return Err(Error::shape(format!(
                "rhs has {} rows for system of size {}",
                b.rows, self.n
            )));
        }
        let mut out = CMatrix::zeros(b.rows, b.cols);
        for c in 0..b.cols {
            let x = self.solve(&b.column(c))?;
            for (r, v) in x.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve_matrix(&CMatrix::identity(self.n))
    }

    /// Hager/Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> Result<f64> {
        let n = self.n;
        if n == 0 {
            return Ok(1.0);
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x)?;
            let y_norm: f64 = y.iter().map(|z| z.norm()).sum();
            if !y_norm.is_finite() {
                return Ok(f64::INFINITY);
            }
            if y_norm <= estimate {
                break;
            }
            estimate = y_norm;
            let xi: Vec<Complex64> = y
                .iter()
                .map(|z| if z.norm() == 0.0 { ONE } else { z / z.norm() })
                .collect();
            // A^{-H} xi via the transpose solve on conjugates.
            let conj: Vec<Complex64> = xi.iter().map(|z| z.conj()).collect();
            let z: Vec<Complex64> = self
                .solve_transpose(&conj)?
                .iter()
                .map(|v| v.conj())
                .collect();
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx {
                break;
            }
            x = vec![ZERO; n];
            x[j] = ONE;
        }
        Ok(estimate * self.norm1)
    }
}
