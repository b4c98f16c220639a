//! Thin-wire method of moments for parallel dipole arrays.

pub mod assembly;
pub mod basis;
pub mod network;
pub mod sweep;
pub mod weights;

pub use assembly::{
    assemble_impedance, assemble_with, gauss_legendre_unit, MoMSystem, QuadratureRule,
};
pub use basis::{build_basis, BasisSet, Rooftop};
pub use network::{matrix_csv, port_reduce, solve_currents, z_to_s, PortImpedance, MAX_CONDITION};
pub use sweep::{frequency_grid, frequency_sweep, sweep_csv, SweepPoint};
pub use weights::{discrete_impedance, quadrature_weights, QuadratureWeights, WeightEntry};

use crate::error::Result;
use crate::geometry::ArrayGeometry;

/// Assemble and reduce in one step.
pub fn solve_port_impedance(geometry: &ArrayGeometry) -> Result<PortImpedance> {
    port_reduce(&assemble_impedance(geometry)?)
}
