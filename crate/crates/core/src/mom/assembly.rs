//! Galerkin impedance matrix for rooftop bases on parallel thin wires.
//!
//! Z_ij = j k Z0 sum over the segment pieces of i and j of
//!   int int [ f_p(u) f_q(v) - slope_i slope_j / k^2 ] G(z, z') dz dz'
//! with the reduced thin-wire kernel R = sqrt(dz^2 + a^2) on the same wire
//! and the axis-to-axis distance between different wires.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{build_basis, BasisSet};
use crate::error::{Error, Result};
use crate::geometry::{free_space_impedance, ArrayGeometry};
use crate::linalg::CMatrix;

/// Gauss-Legendre nodes and weights mapped to [0, 1].
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be >= 1");
    let n = order;
    if n == 1 {
        return (vec![0.5], vec![1.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (
        nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights.iter().map(|w| 0.5 * w).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    /// Gauss points per segment when the two segments are close.
    pub near_points: usize,
    /// Gauss points per segment otherwise.
    pub far_points: usize,
    /// Centre distance, in segment lengths, below which `near_points` is used.
    pub near_distance: f64,
    /// Integrate the static 1/R part analytically for same-wire neighbours.
    pub singular_extraction: bool,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule {
            near_points: 8,
            far_points: 4,
            near_distance: 3.0,
            singular_extraction: true,
        }
    }
}

impl QuadratureRule {
    /// Plain tensor Gauss rule of the given order everywhere.
    pub fn uniform(points: usize) -> Self {
        QuadratureRule {
            near_points: points,
            far_points: points,
            near_distance: 0.0,
            singular_extraction: false,
        }
    }
}

/// The MoM linear system V = Z I plus the port selection.
#[derive(Debug, Clone, PartialEq)]
pub struct MoMSystem {
    pub impedance: CMatrix,
    /// Column of Z selected by each port (the single 1 in each row of the port map).
    pub port_columns: Vec<usize>,
    /// Port current excitation (defaults to ones).
    pub excitation: Vec<Complex64>,
    pub frequency_hz: f64,
}

impl MoMSystem {
    pub fn new(impedance: CMatrix, port_columns: Vec<usize>, frequency_hz: f64) -> Result<Self> {
        if !impedance.is_square() {
            return Err(Error::shape("impedance matrix must be square"));
        }
        for (p, &c) in port_columns.iter().enumerate() {
            if c >= impedance.rows {
                return Err(Error::domain(format!(
                    "port {p} selects column {c} outside Z"
                )));
            }
            if port_columns[..p].contains(&c) {
                return Err(Error::domain(format!(
                    "ports must select distinct columns ({c} repeated)"
                )));
            }
        }
        let excitation = vec![Complex64::new(1.0, 0.0); port_columns.len()];
        Ok(MoMSystem {
            impedance,
            port_columns,
            excitation,
            frequency_hz,
        })
    }

    pub fn port_count(&self) -> usize {
        self.port_columns.len()
    }

    /// Dense 0/1 port selection matrix, P x T'.
    pub fn port_matrix(&self) -> Vec<Vec<f64>> {
        self.port_columns
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; self.impedance.cols];
                row[c] = 1.0;
                row
            })
            .collect()
    }

    /// Delta-gap voltage vector: `volts` at every port basis.
    pub fn delta_gap(&self, volts: &[Complex64]) -> Result<Vec<Complex64>> {
        if volts.len() != self.port_count() {
            return Err(Error::shape(format!(
                "{} port voltages for {} ports",
                volts.len(),
                self.port_count()
            )));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); self.impedance.rows];
        for (&c, &u) in self.port_columns.iter().zip(volts) {
            v[c] = u;
        }
        Ok(v)
    }
}

/// int int f_p(u) f_q(v) G dz dz' for p, q in {Fall, Rise}, indexed [p][q].
type PairIntegral = [[Complex64; 2]; 2];

struct SegmentTable {
    count: usize,
    values: Vec<PairIntegral>,
}

impl SegmentTable {
    fn get(&self, s: usize, t: usize) -> &PairIntegral {
        &self.values[s * self.count + t]
    }
}

struct Kernel<'a> {
    geometry: &'a ArrayGeometry,
    k: f64,
    radius: f64,
    dl: f64,
    rule: QuadratureRule,
    near: (Vec<f64>, Vec<f64>),
    far: (Vec<f64>, Vec<f64>),
}

impl<'a> Kernel<'a> {
    fn new(geometry: &'a ArrayGeometry, rule: QuadratureRule) -> Self {
        Kernel {
            geometry,
            k: geometry.wavenumber(),
            radius: geometry.dipole.radius_m,
            dl: geometry.dipole.segment_length(),
            rule,
            near: gauss_legendre_unit(rule.near_points.max(1)),
            far: gauss_legendre_unit(rule.far_points.max(1)),
        }
    }

    fn segment_start(&self, s: usize) -> (f64, f64) {
        let n = self.geometry.dipole.segments;
        let x = self.geometry.positions_m[s / n];
        (
            x,
            -0.5 * self.geometry.dipole.length_m + (s % n) as f64 * self.dl,
        )
    }

    fn pair(&self, s: usize, t: usize) -> PairIntegral {
        let (xs, zs) = self.segment_start(s);
        let (xt, zt) = self.segment_start(t);
        let same_wire = s / self.geometry.dipole.segments == t / self.geometry.dipole.segments;
        let dx = xs - xt;
        let lateral2 = if same_wire {
            self.radius * self.radius
        } else {
            dx * dx
        };
        let centre_gap = ((zs - zt).powi(2) + dx * dx).sqrt() / self.dl;
        if same_wire && self.rule.singular_extraction && s.abs_diff(t) <= 1 {
            return self.pair_extracted(zs, zt);
        }
        let (nodes, weights) = if centre_gap < self.rule.near_distance {
            &self.near
        } else {
            &self.far
        };
        let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (&ua, &wa) in nodes.iter().zip(weights) {
            let za = zs + ua * self.dl;
            let fa = [1.0 - ua, ua];
            let mut inner = [Complex64::new(0.0, 0.0); 2];
            for (&ub, &wb) in nodes.iter().zip(weights) {
                let dz = za - (zt + ub * self.dl);
                let r = (dz * dz + lateral2).sqrt();
                let g = crate::geometry::green_unchecked(r, self.k) * wb;
                inner[0] += g * (1.0 - ub);
                inner[1] += g * ub;
            }
            for p in 0..2 {
                for q in 0..2 {
                    acc[p][q] += inner[q] * (wa * fa[p]);
                }
            }
        }
        scale_pair(acc, self.dl * self.dl)
    }

    /// Same-wire neighbours: the 1/(4 pi R) part of the inner integral is done in
    /// closed form, the bounded remainder (exp(-jkR) - 1)/(4 pi R) by Gauss.
    fn pair_extracted(&self, zs: f64, zt: f64) -> PairIntegral {
        let (nodes, weights) = &self.near;
        let a = self.radius;
        let a2 = a * a;
        let (z0, z1) = (zt, zt + self.dl);
        let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (&ua, &wa) in nodes.iter().zip(weights) {
            let z = zs + ua * self.dl;
            let (ta, tb) = (z0 - z, z1 - z);
            let int_inv_r = (tb / a).asinh() - (ta / a).asinh();
            let int_t_over_r = (tb * tb + a2).sqrt() - (ta * ta + a2).sqrt();
            let int_v = ((z - z0) * int_inv_r + int_t_over_r) / self.dl;
            let stat = [
                Complex64::new((int_inv_r - int_v) / (4.0 * PI), 0.0),
                Complex64::new(int_v / (4.0 * PI), 0.0),
            ];
            let mut smooth = [Complex64::new(0.0, 0.0); 2];
            for (&ub, &wb) in nodes.iter().zip(weights) {
                let dz = z - (zt + ub * self.dl);
                let r = (dz * dz + a2).sqrt();
                let (sn, cs) = (self.k * r).sin_cos();
                let g = Complex64::new(cs - 1.0, -sn) / (4.0 * PI * r) * (wb * self.dl);
                smooth[0] += g * (1.0 - ub);
                smooth[1] += g * ub;
            }
            let fa = [1.0 - ua, ua];
            for p in 0..2 {
                for q in 0..2 {
                    acc[p][q] += (stat[q] + smooth[q]) * (wa * fa[p] * self.dl);
                }
            }
        }
        acc
    }

    fn table(&self) -> SegmentTable {
        let count = self.geometry.total_segments();
        let mut values = vec![[[Complex64::new(0.0, 0.0); 2]; 2]; count * count];
        for s in 0..count {
            for t in s..count {
                let v = self.pair(s, t);
                values[s * count + t] = v;
                values[t * count + s] = [[v[0][0], v[1][0]], [v[0][1], v[1][1]]];
            }
        }
        SegmentTable { count, values }
    }
}

fn scale_pair(mut p: PairIntegral, s: f64) -> PairIntegral {
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    p
}

/// Assembles Z with the default quadrature and free-space Z0.
pub fn assemble_impedance(geometry: &ArrayGeometry) -> Result<MoMSystem> {
    assemble_with(geometry, QuadratureRule::default(), free_space_impedance())
}

pub fn assemble_with(geometry: &ArrayGeometry, rule: QuadratureRule, z0: f64) -> Result<MoMSystem> {
    geometry.validate()?;
    let basis = build_basis(geometry)?;
    let min_gap = geometry
        .spacings_m()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_gap <= 2.0 * geometry.dipole.radius_m {
        return Err(Error::domain(format!(
            "elements {min_gap} m apart overlap for wire radius {}",
            geometry.dipole.radius_m
        )));
    }
    let kernel = Kernel::new(geometry, rule);
    let table = kernel.table();
    let impedance = impedance_from_table(&basis, &table, kernel.k, z0);
    let ports = (0..geometry.element_count())
        .map(|e| basis.port_index(e))
        .collect();
    MoMSystem::new(impedance, ports, geometry.frequency_hz)
}

fn impedance_from_table(basis: &BasisSet, table: &SegmentTable, k: f64, z0: f64) -> CMatrix {
    let t = basis.len();
    let pieces: Vec<_> = (0..t).map(|i| basis.pieces(i)).collect();
    let prefactor = Complex64::new(0.0, k * z0);
    let inv_k2 = 1.0 / (k * k);
    let mut z = CMatrix::zeros(t, t);
    for i in 0..t {
        for j in i..t {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(s, p, sigma_s) in &pieces[i] {
                for &(u, q, sigma_u) in &pieces[j] {
                    let ints = table.get(s, u);
                    let total = ints[0][0] + ints[0][1] + ints[1][0] + ints[1][1];
                    acc += ints[p as usize][q as usize] - total * (sigma_s * sigma_u * inv_k2);
                }
            }
            let v = prefactor * acc;
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
    }
    z
}
