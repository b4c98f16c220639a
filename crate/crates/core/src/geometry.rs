//! Array geometry, segmentation and the free-space scalar Green's function.
//!
//! Dipoles are parallel to the z axis and centred at z = 0; elements sit on the
//! x axis at `positions_m`. Every dipole is cut into `segments` equal pieces and
//! Green samples are taken at segment centres.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MU0: f64 = 1.256_637_062_12e-6;
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Free-space wave impedance sqrt(mu0/eps0), about 376.7303 ohm.
pub fn free_space_impedance() -> f64 {
    (MU0 / EPS0).sqrt()
}

pub const GEOMETRY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpec {
    pub length_m: f64,
    pub radius_m: f64,
    pub segments: usize,
}

impl DipoleSpec {
    pub fn new(length_m: f64, radius_m: f64, segments: usize) -> Result<Self> {
        let spec = DipoleSpec {
            length_m,
            radius_m,
            segments,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Half-wave dipole at `frequency_hz` with radius given as a fraction of the wavelength.
    pub fn half_wave(frequency_hz: f64, radius_wavelengths: f64, segments: usize) -> Result<Self> {
        let lambda = wavelength(frequency_hz)?;
        Self::new(0.5 * lambda, radius_wavelengths * lambda, segments)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            return Err(Error::domain(format!(
                "dipole length must be > 0, got {}",
                self.length_m
            )));
        }
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(Error::domain(format!(
                "dipole radius must be > 0, got {}",
                self.radius_m
            )));
        }
        if self.radius_m >= self.length_m / 50.0 {
            return Err(Error::domain(format!(
                "thin-wire model needs radius < length/50 (radius {}, length {})",
                self.radius_m, self.length_m
            )));
        }
        if self.segments < 2 {
            return Err(Error::domain(format!(
                "need at least 2 segments, got {}",
                self.segments
            )));
        }
        Ok(())
    }

    pub fn segment_length(&self) -> f64 {
        self.length_m / self.segments as f64
    }

    /// z coordinate of the centre of segment `s` (0-based).
    pub fn segment_center(&self, s: usize) -> f64 {
        -0.5 * self.length_m + (s as f64 + 0.5) * self.segment_length()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub dipole: DipoleSpec,
    pub positions_m: Vec<f64>,
    pub frequency_hz: f64,
}

impl ArrayGeometry {
    pub fn new(dipole: DipoleSpec, positions_m: Vec<f64>, frequency_hz: f64) -> Result<Self> {
        let geometry = ArrayGeometry {
            dipole,
            positions_m,
            frequency_hz,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Elements placed left to right starting at x = 0 with the given gaps.
    pub fn from_spacings(
        dipole: DipoleSpec,
        spacings_m: &[f64],
        frequency_hz: f64,
    ) -> Result<Self> {
        let mut positions = Vec::with_capacity(spacings_m.len() + 1);
        positions.push(0.0);
        let mut x = 0.0;
        for &d in spacings_m {
            x += d;
            positions.push(x);
        }
        Self::new(dipole, positions, frequency_hz)
    }

    pub fn single(dipole: DipoleSpec, frequency_hz: f64) -> Result<Self> {
        Self::new(dipole, vec![0.0], frequency_hz)
    }

    pub fn validate(&self) -> Result<()> {
        self.dipole.validate()?;
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::domain(format!(
                "frequency must be > 0, got {}",
                self.frequency_hz
            )));
        }
        if self.positions_m.is_empty() {
            return Err(Error::domain("array needs at least one element"));
        }
        if self.positions_m.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("element positions must be finite"));
        }
        for w in self.positions_m.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::domain(format!(
                    "element positions must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.positions_m.len()
    }

    pub fn total_segments(&self) -> usize {
        self.element_count() * self.dipole.segments
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    pub fn wavenumber(&self) -> f64 {
        self.angular_frequency() / SPEED_OF_LIGHT
    }

    pub fn spacings_m(&self) -> Vec<f64> {
        self.positions_m.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same array moved rigidly along x.
    pub fn translated(&self, dx: f64) -> ArrayGeometry {
        ArrayGeometry {
            dipole: self.dipole,
            positions_m: self.positions_m.iter().map(|x| x + dx).collect(),
            frequency_hz: self.frequency_hz,
        }
    }

    pub fn with_frequency(&self, frequency_hz: f64) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.dipole, self.positions_m.clone(), frequency_hz)
    }

    /// (x, z) of every segment centre, element-major.
    pub fn segment_centers(&self) -> Vec<(f64, f64)> {
        let n = self.dipole.segments;
        self.positions_m
            .iter()
            .flat_map(|&x| (0..n).map(move |s| (x, s)))
            .map(|(x, s)| (x, self.dipole.segment_center(s)))
            .collect()
    }
}

/// On-disk geometry document. Exactly one of `positions_m` / `spacings_m` is given.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub length_m: f64,
    pub radius_m: f64,
    pub segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings_m: Option<Vec<f64>>,
    pub frequency_hz: f64,
}

fn default_schema() -> u32 {
    GEOMETRY_SCHEMA_VERSION
}

impl GeometryFile {
    pub fn into_geometry(self) -> Result<ArrayGeometry> {
        if self.schema_version != GEOMETRY_SCHEMA_VERSION {
            return Err(Error::domain(format!(
                "unsupported geometry schema_version {}",
                self.schema_version
            )));
        }
        let dipole = DipoleSpec::new(self.length_m, self.radius_m, self.segments)?;
        match (self.positions_m, self.spacings_m) {
            (Some(p), None) => ArrayGeometry::new(dipole, p, self.frequency_hz),
            (None, Some(s)) => ArrayGeometry::from_spacings(dipole, &s, self.frequency_hz),
            (None, None) => ArrayGeometry::single(dipole, self.frequency_hz),
            (Some(_), Some(_)) => Err(Error::domain("give positions_m or spacings_m, not both")),
        }
    }
}

impl From<&ArrayGeometry> for GeometryFile {
    fn from(g: &ArrayGeometry) -> Self {
        GeometryFile {
            schema_version: GEOMETRY_SCHEMA_VERSION,
            length_m: g.dipole.length_m,
            radius_m: g.dipole.radius_m,
            segments: g.dipole.segments,
            positions_m: Some(g.positions_m.clone()),
            spacings_m: None,
            frequency_hz: g.frequency_hz,
        }
    }
}

impl Serialize for ArrayGeometry {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        GeometryFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ArrayGeometry {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        GeometryFile::deserialize(deserializer)?
            .into_geometry()
            .map_err(serde::de::Error::custom)
    }
}

pub fn wavelength(frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0, got {frequency_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT / frequency_hz)
}

/// exp(-j k R) / (4 pi R).
pub fn scalar_green(distance_m: f64, wavenumber: f64) -> Result<Complex64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::domain(format!(
            "Green's function needs a positive distance, got {distance_m}; regularise the self term first"
        )));
    }
    Ok(green_unchecked(distance_m, wavenumber))
}

#[inline]
pub(crate) fn green_unchecked(r: f64, k: f64) -> Complex64 {
    let (s, c) = (k * r).sin_cos();
    Complex64::new(c, -s) / (4.0 * PI * r)
}

/// Frequency factor f N / (2 pi c) pulled out of the half-wave Green's function.
pub fn k_factor(frequency_hz: f64, segments: usize) -> Result<f64> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0, got {frequency_hz}"
        )));
    }
    if segments < 1 {
        return Err(Error::domain("segments must be >= 1"));
    }
    Ok(frequency_hz * segments as f64 / (2.0 * PI * SPEED_OF_LIGHT))
}

/// Dimensionless bracket term exp(-j pi delta / N) / delta for integer segment offsets.
pub fn factored_green(delta: usize, segments: usize) -> Result<Complex64> {
    if delta == 0 {
        return Err(Error::domain(
            "factored Green's function is singular at delta = 0; use the thin-wire self term",
        ));
    }
    if segments < 1 {
        return Err(Error::domain("segments must be >= 1"));
    }
    Ok(factored_unchecked(delta as f64, PI / segments as f64))
}

#[inline]
fn factored_unchecked(distance_segments: f64, phase_per_segment: f64) -> Complex64 {
    let (s, c) = (phase_per_segment * distance_segments).sin_cos();
    Complex64::new(c, -s) / distance_segments
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenKind {
    /// exp(-jkR)/(4 pi R), units 1/m.
    Full,
    /// exp(-j k dl R~)/R~ with R~ = R/dl, dimensionless.
    FrequencyFactored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenMatrix {
    pub kind: GreenKind,
    pub side: usize,
    /// Row-major, side x side.
    pub entries: Vec<Complex64>,
}

impl GreenMatrix {
    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.side + n]
    }

    /// Upper triangle including the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.side * (self.side + 1) / 2);
        for m in 0..self.side {
            for n in m..self.side {
                out.push(self.get(m, n));
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.side {
            for n in 0..m {
                worst = worst.max((self.get(m, n) - self.get(n, m)).norm());
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        for m in 0..self.side {
            for n in 0..self.side {
                let z = self.get(m, n);
                let _ = writeln!(out, "{m},{n},{:.17e},{:.17e}", z.re, z.im);
            }
        }
        out
    }

    pub fn to_json(&self, geometry: &ArrayGeometry) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.side)
            .map(|m| {
                (0..self.side)
                    .map(|n| [self.get(m, n).re, self.get(m, n).im])
                    .collect()
            })
            .collect();
        serde_json::json!({
            "geometry": geometry,
            "kind": self.kind,
            "side": self.side,
            "entries": rows,
        })
    }
}

/// 1/(4 pi dl): converts a frequency-factored entry to the full Green's function.
/// Equals `k_factor` for a half-wave dipole.
pub fn factored_scale(geometry: &ArrayGeometry) -> f64 {
    1.0 / (4.0 * PI * geometry.dipole.segment_length())
}

/// Segment-centre Green matrix over all T = M*N segments.
///
/// Off-diagonal entries use the exact centre-to-centre distance; the diagonal
/// uses R = wire radius (thin-wire self term).
pub fn green_matrix(geometry: &ArrayGeometry, kind: GreenKind) -> GreenMatrix {
    let centers = geometry.segment_centers();
    let side = centers.len();
    let k = geometry.wavenumber();
    let dl = geometry.dipole.segment_length();
    let radius = geometry.dipole.radius_m;
    let mut entries = vec![Complex64::new(0.0, 0.0); side * side];
    for m in 0..side {
        for n in m..side {
            let r = if m == n {
                radius
            } else {
                let (dx, dz) = (centers[m].0 - centers[n].0, centers[m].1 - centers[n].1);
                (dx * dx + dz * dz).sqrt()
            };
            let value = match kind {
                GreenKind::Full => green_unchecked(r, k),
                GreenKind::FrequencyFactored => factored_unchecked(r / dl, k * dl),
            };
            entries[m * side + n] = value;
            entries[n * side + m] = value;
        }
    }
    GreenMatrix {
        kind,
        side,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half_wave(n: usize) -> ArrayGeometry {
        let dipole = DipoleSpec::half_wave(3e9, 0.002, n).unwrap();
        ArrayGeometry::single(dipole, 3e9).unwrap()
    }

    #[test]
    fn wavelength_examples() {
        assert_relative_eq!(
            wavelength(3.0e9).unwrap(),
            0.099_930_819_333,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            wavelength(2.4e9).unwrap(),
            0.124_913_524_167,
            epsilon = 1e-9
        );
        assert!(matches!(wavelength(0.0), Err(Error::Domain(_))));
        assert!(wavelength(-1.0).is_err());
    }

    #[test]
    fn scalar_green_examples() {
        let g = scalar_green(1.0, 0.0).unwrap();
        assert_relative_eq!(g.re, 0.079_577_471_545_947_67, epsilon = 1e-15);
        assert_eq!(g.im, 0.0);

        let lambda = 0.3;
        let k = 2.0 * PI / lambda;
        let g = scalar_green(lambda, k).unwrap();
        assert_relative_eq!(g.re, 1.0 / (4.0 * PI * lambda), epsilon = 1e-12);
        assert!(g.im.abs() < 1e-12);

        let g = scalar_green(lambda / 2.0, k).unwrap();
        assert_relative_eq!(g.re, -1.0 / (2.0 * PI * lambda), epsilon = 1e-12);
        assert!(g.im.abs() < 1e-12);

        assert!(scalar_green(0.0, k).is_err());
    }

    #[test]
    fn k_factor_examples() {
        let exact = |f: f64, n: f64| f * n / (2.0 * PI * SPEED_OF_LIGHT);
        assert_relative_eq!(
            k_factor(3e9, 16).unwrap(),
            exact(3e9, 16.0),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            k_factor(3e9, 32).unwrap(),
            2.0 * k_factor(3e9, 16).unwrap(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            k_factor(1.5e9, 16).unwrap(),
            0.5 * k_factor(3e9, 16).unwrap(),
            max_relative = 1e-15
        );
        // The commonly quoted 25.4648 / 50.9296 / 12.7324 use c = 3e8.
        assert_relative_eq!(k_factor(3e9, 16).unwrap(), 25.4648, max_relative = 1e-3);
        assert_relative_eq!(k_factor(3e9, 32).unwrap(), 50.9296, max_relative = 1e-3);
        assert_relative_eq!(k_factor(1.5e9, 16).unwrap(), 12.7324, max_relative = 1e-3);
        assert_relative_eq!(3e9 * 16.0 / (2.0 * PI * 3e8), 25.4648, max_relative = 2e-6);
        assert!(k_factor(0.0, 16).is_err());
        assert!(k_factor(3e9, 0).is_err());
    }

    #[test]
    fn factored_green_examples() {
        let g = factored_green(16, 16).unwrap();
        assert_relative_eq!(g.re, -0.0625, epsilon = 1e-15);
        assert!(g.im.abs() < 1e-15);
        let g = factored_green(8, 16).unwrap();
        assert!(g.re.abs() < 1e-15);
        assert_relative_eq!(g.im, -0.125, epsilon = 1e-15);
        assert!(factored_green(0, 16).is_err());
    }

    #[test]
    fn factored_times_k_factor_is_full_for_half_wave() {
        // Delta = 1 at several frequencies: G(dl, k) = k(f) * bracket.
        for &f in &[1.0e9, 2.4e9, 3.0e9, 7.7e9] {
            let n = 16;
            let lambda = wavelength(f).unwrap();
            let dl = 0.5 * lambda / n as f64;
            let k = 2.0 * PI / lambda;
            let full = scalar_green(dl, k).unwrap();
            let bracket = factored_green(1, n).unwrap();
            let ratio = full / bracket;
            assert_relative_eq!(ratio.re, k_factor(f, n).unwrap(), max_relative = 1e-12);
            assert!(ratio.im.abs() < 1e-9 * ratio.re);
        }
    }

    #[test]
    fn two_segment_matrix_is_symmetric_with_equal_diagonal() {
        let g = green_matrix(&half_wave(2), GreenKind::Full);
        assert_eq!(g.side, 2);
        assert_eq!(g.get(0, 1), g.get(1, 0));
        assert_eq!(g.get(0, 0), g.get(1, 1));
    }

    #[test]
    fn n16_matches_bracket_formula_loop() {
        let geometry = half_wave(16);
        let g = green_matrix(&geometry, GreenKind::FrequencyFactored);
        let n = 16usize;
        for m in 0..n {
            for q in 0..n {
                if m == q {
                    continue;
                }
                let delta = (m as f64 - q as f64).abs();
                let expected = Complex64::new(0.0, -PI * delta / n as f64).exp() / delta;
                assert!((g.get(m, q) - expected).norm() <= 1e-12 * expected.norm());
                assert!((g.get(m, q).norm() * delta - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(g.max_asymmetry(), 0.0);
    }

    #[test]
    fn full_equals_k_factor_times_factored() {
        let geometry = half_wave(16);
        let full = green_matrix(&geometry, GreenKind::Full);
        let fac = green_matrix(&geometry, GreenKind::FrequencyFactored);
        let kf = k_factor(geometry.frequency_hz, 16).unwrap();
        assert_relative_eq!(factored_scale(&geometry), kf, max_relative = 1e-12);
        for (a, b) in full.entries.iter().zip(&fac.entries) {
            assert!((a - b * kf).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn relabelling_permutes_matrix() {
        // Swapping two identical elements relabels segment blocks.
        let dipole = DipoleSpec::half_wave(3e9, 0.002, 4).unwrap();
        let g = ArrayGeometry::new(dipole, vec![0.0, 0.02, 0.05], 3e9).unwrap();
        let full = green_matrix(&g, GreenKind::Full);
        // Mirror the array: element order reverses and z -> z is unchanged by symmetry.
        let mirrored = ArrayGeometry::new(dipole, vec![-0.05, -0.02, 0.0], 3e9).unwrap();
        let fm = green_matrix(&mirrored, GreenKind::Full);
        let n = 4;
        let perm = |i: usize| (2 - i / n) * n + i % n;
        for a in 0..12 {
            for b in 0..12 {
                assert!(
                    (full.get(a, b) - fm.get(perm(a), perm(b))).norm()
                        < 1e-9 * full.get(a, b).norm()
                );
            }
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(DipoleSpec::new(0.05, 0.002, 16).is_err()); // radius too large
        assert!(DipoleSpec::new(0.05, 0.0005, 1).is_err());
        assert!(DipoleSpec::new(-1.0, 0.0005, 8).is_err());
        let d = DipoleSpec::new(0.05, 0.0005, 8).unwrap();
        assert!(ArrayGeometry::new(d, vec![0.0, 0.0], 3e9).is_err());
        assert!(ArrayGeometry::new(d, vec![], 3e9).is_err());
        assert!(ArrayGeometry::new(d, vec![0.0], 0.0).is_err());
    }

    #[test]
    fn geometry_json_accepts_spacings() {
        let text = r#"{"length_m":0.0625,"radius_m":0.0005,"segments":16,"spacings_m":[0.0625],"frequency_hz":2.4e9}"#;
        let g: ArrayGeometry = serde_json::from_str(text).unwrap();
        assert_eq!(g.positions_m, vec![0.0, 0.0625]);
        let back: ArrayGeometry =
            serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"length_m":0.0625,"radius_m":0.0005,"segments":16,"spacings_m":[0.1],"positions_m":[0.0],"frequency_hz":2.4e9}"#;
        assert!(serde_json::from_str::<ArrayGeometry>(bad).is_err());
    }

    #[test]
    fn csv_has_full_matrix() {
        let g = green_matrix(&half_wave(2), GreenKind::Full);
        let csv = g.to_csv();
        assert!(csv.starts_with("m,n,re,im\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
