use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Packed length for an M x M symmetric complex matrix.
pub fn packed_len(m: usize) -> usize {
    m * (m + 1)
}

/// Upper triangle row by row, real parts first, then imaginary parts.
pub fn pack_upper(z: &CMatrix) -> Result<Vec<f64>> {
    if !z.is_square() {
        return Err(Error::shape(format!(
            "cannot pack a {}x{} matrix",
            z.rows, z.cols
        )));
    }
    let m = z.rows;
    let half = packed_len(m) / 2;
    let mut out = vec![0.0; 2 * half];
    let mut k = 0;
    for p in 0..m {
        for q in p..m {
            out[k] = z[(p, q)].re;
            out[half + k] = z[(p, q)].im;
            k += 1;
        }
    }
    Ok(out)
}

/// Inverse of `pack_upper`; the result is exactly symmetric.
pub fn unpack_upper(m: usize, packed: &[f64]) -> Result<CMatrix> {
    if packed.len() != packed_len(m) {
        return Err(Error::shape(format!(
            "{} packed values for {m} elements",
            packed.len()
        )));
    }
    let half = packed.len() / 2;
    let mut z = CMatrix::zeros(m, m);
    let mut k = 0;
    for p in 0..m {
        for q in p..m {
            let v = Complex64::new(packed[k], packed[half + k]);
            z[(p, q)] = v;
            z[(q, p)] = v;
            k += 1;
        }
    }
    Ok(z)
}

/// Element pair (p, q), p <= q, for each packed position within one half.
pub fn packed_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|p| (p..m).map(move |q| (p, q))).collect()
}

/// `index,re_or_im,value` with one global index over both halves.
pub fn packed_csv(packed: &[f64]) -> String {
    let half = packed.len() / 2;
    let mut out = String::from("index,re_or_im,value\n");
    for (i, v) in packed.iter().enumerate() {
        let part = if i < half { "re" } else { "im" };
        let _ = writeln!(out, "{i},{part},{v:.17e}");
    }
    out
}
