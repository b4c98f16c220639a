use std::io::{BufRead, Write};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constraints::{sample_spacings, SpacingConstraints};
use super::packing::{pack_upper, unpack_upper};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, DipoleSpec};
use crate::linalg::CMatrix;
use crate::mom::{solve_port_impedance, PortImpedance};

/// A geometry and its MoM port impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub geometry: ArrayGeometry,
    pub z_port: PortImpedance,
}

impl Sample {
    /// Solves the MoM oracle for `geometry`.
    pub fn solve(geometry: ArrayGeometry) -> Result<Self> {
        let z_port = solve_port_impedance(&geometry)?;
        Ok(Sample { geometry, z_port })
    }
}

/// A sample index whose MoM solve failed, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub seed: u64,
    pub skipped: Vec<SkippedSample>,
}

/// One JSON-lines record.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleLine {
    geometry: ArrayGeometry,
    /// Upper-triangle real parts then imaginary parts.
    z_port: Vec<f64>,
    meta: SampleMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleMeta {
    index: usize,
    seed: u64,
    elements: usize,
    frequency_hz: f64,
}

/// Solves every geometry, in parallel over samples; results keep input order.
/// Failed solves are logged and reported in `skipped`.
pub fn solve_all(geometries: Vec<ArrayGeometry>, seed: u64) -> Dataset {
    let n = geometries.len();
    let workers = std::thread::available_parallelism()
        .map_or(1, |p| p.get())
        .min(n.max(1));
    let mut results: Vec<Option<Result<Sample>>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(workers.max(1)).max(1);
    std::thread::scope(|scope| {
        for (slot, geoms) in results.chunks_mut(chunk).zip(geometries.chunks(chunk)) {
            scope.spawn(move || {
                for (out, g) in slot.iter_mut().zip(geoms) {
                    *out = Some(Sample::solve(g.clone()));
                }
            });
        }
    });
    let mut samples = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r.expect("every slot is filled") {
            Ok(s) => samples.push(s),
            Err(e) => {
                warn!("sample {index} skipped: {e}");
                skipped.push(SkippedSample {
                    index,
                    reason: e.to_string(),
                });
            }
        }
    }
    Dataset {
        samples,
        seed,
        skipped,
    }
}

/// `n_samples` random layouts of `m_elements` identical dipoles obeying `constraints`.
pub fn gen_dataset(
    n_samples: usize,
    m_elements: usize,
    dipole: DipoleSpec,
    frequency_hz: f64,
    constraints: &SpacingConstraints,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::domain("dataset needs at least one sample"));
    }
    let wavelength = crate::geometry::wavelength(frequency_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut geometries = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let spacings: Vec<f64> = sample_spacings(m_elements, constraints, &mut rng)?
            .iter()
            .map(|d| d * wavelength)
            .collect();
        geometries.push(ArrayGeometry::from_spacings(
            dipole.clone(),
            &spacings,
            frequency_hz,
        )?);
    }
    Ok(solve_all(geometries, seed))
}

/// Two-element layouts with the spacing drawn uniformly from `range` (in wavelengths).
pub fn gen_two_port_dataset(
    n_samples: usize,
    range: (f64, f64),
    dipole: DipoleSpec,
    frequency_hz: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::domain("dataset needs at least one sample"));
    }
    if !(range.0 > 0.0 && range.1 > range.0) {
        return Err(Error::domain(format!("invalid spacing range {range:?}")));
    }
    let wavelength = crate::geometry::wavelength(frequency_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut geometries = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let d = rng.random_range(range.0..range.1) * wavelength;
        geometries.push(ArrayGeometry::from_spacings(
            dipole.clone(),
            &[d],
            frequency_hz,
        )?);
    }
    Ok(solve_all(geometries, seed))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for (index, s) in self.samples.iter().enumerate() {
            let line = SampleLine {
                geometry: s.geometry.clone(),
                z_port: pack_upper(&s.z_port.entries)?,
                meta: SampleMeta {
                    index,
                    seed: self.seed,
                    elements: s.geometry.element_count(),
                    frequency_hz: s.z_port.frequency_hz,
                },
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut samples = Vec::new();
        let mut seed = 0;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleLine = serde_json::from_str(&line)?;
            let m = rec.geometry.element_count();
            let entries: CMatrix = unpack_upper(m, &rec.z_port)?;
            seed = rec.meta.seed;
            samples.push(Sample {
                geometry: rec.geometry,
                z_port: PortImpedance {
                    entries,
                    frequency_hz: rec.meta.frequency_hz,
                },
            });
        }
        Ok(Dataset {
            samples,
            seed,
            skipped: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dipole() -> DipoleSpec {
        DipoleSpec::half_wave(3e9, 0.002, 4).unwrap()
    }

    #[test]
    fn single_sample_has_a_reciprocal_target() {
        let d = gen_dataset(1, 3, dipole(), 3e9, &SpacingConstraints::default(), 1).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.skipped.is_empty());
        assert!(d.samples[0].z_port.entries.relative_asymmetry() <= 1e-10);
        assert!(gen_dataset(0, 3, dipole(), 3e9, &SpacingConstraints::default(), 1).is_err());
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let c = SpacingConstraints::default();
        let a = gen_dataset(4, 5, dipole(), 3e9, &c, 9).unwrap();
        let b = gen_dataset(4, 5, dipole(), 3e9, &c, 9).unwrap();
        assert_eq!(a, b);
        let other = gen_dataset(4, 5, dipole(), 3e9, &c, 10).unwrap();
        assert_ne!(a.samples[0].geometry, other.samples[0].geometry);
        let lam = crate::geometry::wavelength(3e9).unwrap();
        for s in &a.samples {
            let sp: Vec<f64> = s.geometry.spacings_m().iter().map(|d| d / lam).collect();
            assert!(c.violations(&sp).is_empty());
        }
    }

    #[test]
    fn two_port_spacings_stay_in_range() {
        let d = gen_two_port_dataset(20, (0.04, 0.7), dipole(), 3e9, 4).unwrap();
        let lam = crate::geometry::wavelength(3e9).unwrap();
        for s in &d.samples {
            let x = s.geometry.spacings_m()[0] / lam;
            assert!((0.04..0.7).contains(&x));
        }
        assert!(gen_two_port_dataset(5, (0.5, 0.1), dipole(), 3e9, 4).is_err());
    }

    #[test]
    fn failed_solves_are_reported_not_dropped() {
        // Elements closer than a wire diameter are rejected by the solver.
        let g_ok = ArrayGeometry::from_spacings(dipole(), &[0.03], 3e9).unwrap();
        let g_bad = ArrayGeometry::from_spacings(dipole(), &[1e-4], 3e9).unwrap();
        let d = solve_all(vec![g_ok.clone(), g_bad, g_ok], 0);
        assert_eq!(d.samples.len(), 2);
        assert_eq!(d.skipped.len(), 1);
        assert_eq!(d.skipped[0].index, 1);
        assert!(d.skipped[0].reason.contains("overlap"));
    }

    #[test]
    fn jsonl_round_trip() {
        let d = gen_dataset(3, 3, dipole(), 3e9, &SpacingConstraints::default(), 5).unwrap();
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 3);
        let back = Dataset::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.seed, 5);
        for (a, b) in back.samples.iter().zip(&d.samples) {
            assert_eq!(a.geometry, b.geometry);
            for p in 0..3 {
                for q in p..3 {
                    assert_eq!(a.z_port.get(p, q), b.z_port.get(p, q));
                    assert_eq!(a.z_port.get(q, p), a.z_port.get(p, q));
                }
            }
        }
    }
}
