//! Current solves, port reduction and network-parameter conversion.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assembly::MoMSystem;
use crate::error::{Error, Result};
use crate::linalg::{vec_norm, CMatrix};

/// Condition estimates above this are refused by `solve_currents`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortImpedance {
    pub entries: CMatrix,
    pub frequency_hz: f64,
}

impl PortImpedance {
    pub fn ports(&self) -> usize {
        self.entries.rows
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.entries[(p, q)]
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.entries)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "frequency_hz": self.frequency_hz,
            "ports": self.ports(),
            "entries": matrix_rows(&self.entries),
        })
    }
}

/// `p,q,re,im` rows for every entry.
pub fn matrix_csv(m: &CMatrix) -> String {
    let mut out = String::from("p,q,re,im\n");
    for p in 0..m.rows {
        for q in 0..m.cols {
            let z = m[(p, q)];
            let _ = writeln!(out, "{p},{q},{:.17e},{:.17e}", z.re, z.im);
        }
    }
    out
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows)
        .map(|p| (0..m.cols).map(|q| [m[(p, q)].re, m[(p, q)].im]).collect())
        .collect()
}

/// Solves Z I = V, refusing ill-conditioned systems.
pub fn solve_currents(system: &MoMSystem, voltage: &[Complex64]) -> Result<Vec<Complex64>> {
    let lu = system.impedance.lu()?;
    let condition = lu.condition_estimate()?;
    if !(condition < MAX_CONDITION) {
        return Err(Error::Solver {
            reason: "impedance matrix is ill-conditioned".into(),
            condition,
        });
    }
    let current = lu.solve(voltage)?;
    let residual: Vec<Complex64> = system
        .impedance
        .matvec(&current)?
        .iter()
        .zip(voltage)
        .map(|(a, b)| a - b)
        .collect();
    let v_norm = vec_norm(voltage);
    if v_norm > 0.0 && vec_norm(&residual) > 1e-8 * v_norm {
        return Err(Error::Solver {
            reason: format!(
                "residual {:.3e} exceeds tolerance",
                vec_norm(&residual) / v_norm
            ),
            condition,
        });
    }
    Ok(current)
}

/// Z_port = (M Z^-1 M^T)^-1.
pub fn port_reduce(system: &MoMSystem) -> Result<PortImpedance> {
    let p = system.port_count();
    if p == 0 {
        return Err(Error::Reduction("system has no ports".into()));
    }
    let lu = system
        .impedance
        .lu()
        .map_err(|e| Error::Reduction(e.to_string()))?;
    let mut admittance = CMatrix::zeros(p, p);
    for (q, &col) in system.port_columns.iter().enumerate() {
        let mut rhs = vec![Complex64::new(0.0, 0.0); system.impedance.rows];
        rhs[col] = Complex64::new(1.0, 0.0);
        let x = lu.solve(&rhs)?;
        for (r, &row) in system.port_columns.iter().enumerate() {
            admittance[(r, q)] = x[row];
        }
    }
    let entries = admittance
        .inverse()
        .map_err(|e| Error::Reduction(format!("port admittance is singular: {e}")))?;
    Ok(PortImpedance {
        entries,
        frequency_hz: system.frequency_hz,
    })
}

/// S = (Z - z0 I)(Z + z0 I)^-1 against a real reference impedance.
pub fn z_to_s(zport: &PortImpedance, ref_ohms: f64) -> Result<CMatrix> {
    if !(ref_ohms.is_finite() && ref_ohms > 0.0) {
        return Err(Error::Conversion(format!(
            "reference impedance must be > 0, got {ref_ohms}"
        )));
    }
    let n = zport.ports();
    let shift = CMatrix::identity(n).scale(Complex64::new(ref_ohms, 0.0));
    let minus = zport.entries.sub(&shift)?;
    let plus = zport.entries.add(&shift)?;
    let inv = plus
        .inverse()
        .map_err(|e| Error::Conversion(format!("Z + z0 I is singular: {e}")))?;
    minus.matmul(&inv)
}
