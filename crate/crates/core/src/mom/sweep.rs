use std::fmt::Write as _;

use super::assembly::assemble_impedance;
use super::network::{port_reduce, z_to_s, PortImpedance};
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub frequency_hz: f64,
    pub z_port: PortImpedance,
    pub s: CMatrix,
}

/// `n_points` frequencies from `f_start` to `f_stop` inclusive.
pub fn frequency_grid(f_start: f64, f_stop: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(f_start > 0.0 && f_start < f_stop && f_stop.is_finite()) {
        return Err(Error::domain(format!(
            "sweep needs 0 < f_start < f_stop, got {f_start}..{f_stop}"
        )));
    }
    if n_points < 2 {
        return Err(Error::domain("sweep needs at least 2 points"));
    }
    let step = (f_stop - f_start) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                f_stop
            } else {
                f_start + step * i as f64
            }
        })
        .collect())
}

/// Solves the array at every grid frequency; the dipole dimensions stay fixed.
pub fn frequency_sweep(
    geometry: &ArrayGeometry,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
    ref_ohms: f64,
) -> Result<Vec<SweepPoint>> {
    frequency_grid(f_start, f_stop, n_points)?
        .into_iter()
        .map(|f| {
            let g = geometry.with_frequency(f)?;
            let z_port = port_reduce(&assemble_impedance(&g)?)?;
            let s = z_to_s(&z_port, ref_ohms)?;
            Ok(SweepPoint {
                frequency_hz: f,
                z_port,
                s,
            })
        })
        .collect()
}

/// `f_hz` then every S entry, then every Z entry, as `s{p}{q}_re,s{p}{q}_im` (1-based, column-major).
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let ports = points.first().map_or(0, |p| p.z_port.ports());
    let mut out = String::from("f_hz");
    for prefix in ["s", "z"] {
        for q in 1..=ports {
            for p in 1..=ports {
                let _ = write!(out, ",{prefix}{p}{q}_re,{prefix}{p}{q}_im");
            }
        }
    }
    out.push('\n');
    for pt in points {
        let _ = write!(out, "{:.17e}", pt.frequency_hz);
        for m in [&pt.s, &pt.z_port.entries] {
            for q in 0..ports {
                for p in 0..ports {
                    let v = m[(p, q)];
                    let _ = write!(out, ",{:.17e},{:.17e}", v.re, v.im);
                }
            }
        }
        out.push('\n');
    }
    out
}
