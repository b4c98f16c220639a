use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;

/// Which linear shape a rooftop uses on one of its two segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// u on the segment below the peak node.
    Rise = 1,
    /// 1 - u on the segment above the peak node.
    Fall = 0,
}

/// One triangular rooftop: peak 1 at an interior node, zero outside its two segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rooftop {
    pub element: usize,
    /// Interior node index, 1..N-1.
    pub node: usize,
    pub x_m: f64,
    pub peak_z_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub functions: Vec<Rooftop>,
    pub segments_per_dipole: usize,
    pub segment_length_m: f64,
    pub dipole_length_m: f64,
}

/// N-1 interior rooftops per dipole; currents vanish at the wire ends.
pub fn build_basis(geometry: &ArrayGeometry) -> Result<BasisSet> {
    let n = geometry.dipole.segments;
    if n < 2 {
        return Err(Error::domain(format!(
            "rooftop basis needs >= 2 segments, got {n}"
        )));
    }
    let dl = geometry.dipole.segment_length();
    let half = 0.5 * geometry.dipole.length_m;
    let functions = geometry
        .positions_m
        .iter()
        .enumerate()
        .flat_map(|(element, &x_m)| {
            (1..n).map(move |node| Rooftop {
                element,
                node,
                x_m,
                peak_z_m: -half + node as f64 * dl,
            })
        })
        .collect();
    Ok(BasisSet {
        functions,
        segments_per_dipole: n,
        segment_length_m: dl,
        dipole_length_m: geometry.dipole.length_m,
    })
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn per_dipole(&self) -> usize {
        self.segments_per_dipole - 1
    }

    /// Value of basis `i` at axial position `z` on element `element`.
    pub fn value(&self, i: usize, element: usize, z: f64) -> f64 {
        let f = &self.functions[i];
        if f.element != element {
            return 0.0;
        }
        let t = 1.0 - (z - f.peak_z_m).abs() / self.segment_length_m;
        t.max(0.0)
    }

    /// d/dz of basis `i`; +1/dl below the peak, -1/dl above, 0 outside.
    pub fn slope(&self, i: usize, element: usize, z: f64) -> f64 {
        let f = &self.functions[i];
        let dl = self.segment_length_m;
        if f.element != element || (z - f.peak_z_m).abs() >= dl {
            return 0.0;
        }
        if z < f.peak_z_m {
            1.0 / dl
        } else {
            -1.0 / dl
        }
    }

    /// The two (global segment, shape, slope) pieces of basis `i`.
    pub fn pieces(&self, i: usize) -> [(usize, Shape, f64); 2] {
        let f = &self.functions[i];
        let n = self.segments_per_dipole;
        let dl = self.segment_length_m;
        [
            (f.element * n + f.node - 1, Shape::Rise, 1.0 / dl),
            (f.element * n + f.node, Shape::Fall, -1.0 / dl),
        ]
    }

    /// Index of the port basis of `element`: the rooftop whose peak is nearest the dipole centre.
    pub fn port_index(&self, element: usize) -> usize {
        element * self.per_dipole() + self.segments_per_dipole / 2 - 1
    }
}
