//! Published reference values and the tolerances the `reproduce` reports apply.

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::{wavelength, ArrayGeometry, DipoleSpec};

/// Two half-wave dipoles at 3 GHz, radius 0.002 wavelengths, with a reference port matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceCase {
    pub name: &'static str,
    pub spacing_wavelengths: f64,
    pub z11: Complex64,
    pub z12: Complex64,
}

pub const CASE_FREQUENCY_HZ: f64 = 3e9;
pub const CASE_RADIUS_WAVELENGTHS: f64 = 0.002;

pub const IMPEDANCE_CASES: [ImpedanceCase; 2] = [
    ImpedanceCase {
        name: "case1",
        spacing_wavelengths: 0.052,
        z11: Complex64::new(87.11, 39.20),
        z12: Complex64::new(85.42, 18.69),
    },
    ImpedanceCase {
        name: "case2",
        spacing_wavelengths: 0.206,
        z11: Complex64::new(80.55, 41.58),
        z12: Complex64::new(53.46, -30.06),
    },
];

/// Complex relative error allowed between the MoM oracle and the reference entries.
pub const CASE_TOLERANCE: f64 = 0.15;
/// Allowed relative error of the learned two-port model against the MoM oracle.
pub const SURROGATE_TOLERANCE: f64 = 0.05;
pub const CASE_MAX_SECONDS: f64 = 10.0;

pub const PANN_REFERENCE_LOSS: f64 = 1e-13;
pub const PANN_REFERENCE_EPOCHS: usize = 1200;
pub const PANN_LOSS_TOLERANCE: f64 = 1e-8;
pub const PANN_MAX_SECONDS: f64 = 120.0;

/// (elements, reference loss, loss threshold, held-out normalized RMS threshold).
pub const SYNTHESIS_TARGETS: [(usize, f64, f64, f64); 2] =
    [(10, 1.1e-3, 5e-3, 0.05), (30, 3e-3, 1e-2, 0.08)];
pub const SYNTHESIS_MAX_SECONDS: f64 = 1800.0;

pub const TWO_PORT_LOSS_TOLERANCE: f64 = 5e-3;
pub const TWO_PORT_HOLDOUT_TOLERANCE: f64 = 0.05;

impl ImpedanceCase {
    pub fn geometry(&self, segments: usize) -> Result<ArrayGeometry> {
        let lam = wavelength(CASE_FREQUENCY_HZ)?;
        let dipole = DipoleSpec::half_wave(CASE_FREQUENCY_HZ, CASE_RADIUS_WAVELENGTHS, segments)?;
        ArrayGeometry::from_spacings(dipole, &[self.spacing_wavelengths * lam], CASE_FREQUENCY_HZ)
    }
}

/// |computed - reference| / |reference|.
pub fn complex_relative_error(computed: Complex64, reference: Complex64) -> f64 {
    (computed - reference).norm() / reference.norm()
}
