//! Midpoint discretization: Z_mn = sum over segment pairs of w * G(centre, centre').
//!
//! Coarser than `assemble_impedance` (the self term is under-integrated), kept as
//! the literal discrete form and for comparing against the Gauss assembly.

use num_complex::Complex64;

use super::basis::BasisSet;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, GreenKind, GreenMatrix};
use crate::linalg::CMatrix;

/// One weight: basis pair (m, n) sampled on segments (r, r').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEntry {
    pub basis_m: usize,
    pub basis_n: usize,
    pub segment_r: usize,
    pub segment_rp: usize,
    pub w: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    pub basis_count: usize,
    pub segment_count: usize,
    /// Every (m, n) in 0..T' x 0..T', four segment pairs each, m-major.
    pub entries: Vec<WeightEntry>,
}

impl QuadratureWeights {
    pub fn get(&self, m: usize, n: usize, r: usize, rp: usize) -> Option<Complex64> {
        let base = (m * self.basis_count + n) * 4;
        self.entries[base..base + 4]
            .iter()
            .find(|e| e.segment_r == r && e.segment_rp == rp)
            .map(|e| e.w)
    }
}

/// w = j k Z0 dl^2 (psi_m psi_n - psi_m' psi_n' / k^2) at segment centres.
pub fn quadrature_weights(
    basis: &BasisSet,
    geometry: &ArrayGeometry,
    z0: f64,
) -> QuadratureWeights {
    let k = geometry.wavenumber();
    let dl = basis.segment_length_m;
    let prefactor = Complex64::new(0.0, k * z0 * dl * dl);
    let t = basis.len();
    let pieces: Vec<_> = (0..t).map(|i| basis.pieces(i)).collect();
    let mut entries = Vec::with_capacity(t * t * 4);
    for m in 0..t {
        for n in 0..t {
            for &(r, _, sm) in &pieces[m] {
                for &(rp, _, sn) in &pieces[n] {
                    // Both rooftop pieces are 1/2 at a segment centre.
                    let w = prefactor * (0.25 - sm * sn / (k * k));
                    entries.push(WeightEntry {
                        basis_m: m,
                        basis_n: n,
                        segment_r: r,
                        segment_rp: rp,
                        w,
                    });
                }
            }
        }
    }
    QuadratureWeights {
        basis_count: t,
        segment_count: geometry.total_segments(),
        entries,
    }
}

/// Z_mn = sum_{r, r'} w_mn(r, r') G(r, r') for a full-kind Green matrix.
pub fn discrete_impedance(weights: &QuadratureWeights, green: &GreenMatrix) -> Result<CMatrix> {
    if green.kind != GreenKind::Full {
        return Err(Error::domain(
            "discrete impedance needs the full Green's function",
        ));
    }
    if green.side != weights.segment_count {
        return Err(Error::shape(format!(
            "Green matrix side {} vs {} segments",
            green.side, weights.segment_count
        )));
    }
    let t = weights.basis_count;
    let mut z = CMatrix::zeros(t, t);
    for e in &weights.entries {
        z[(e.basis_m, e.basis_n)] += e.w * green.get(e.segment_r, e.segment_rp);
    }
    Ok(z)
}
