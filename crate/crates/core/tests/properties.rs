//! Property tests for invariants that must hold for every input.

use num_complex::Complex64;
use pclstm::fusion::{fuse, FusionParams};
use pclstm::geometry::{wavelength, ArrayGeometry, DipoleSpec};
use pclstm::linalg::CMatrix;
use pclstm::mom::{assemble_impedance, port_reduce};
use pclstm::nn::Tensor2;
use pclstm::pc_lstm::build_kernel;
use pclstm::synthesis::{
    pack_upper, packed_len, sample_spacings, unpack_upper, SpacingConstraints,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_asymmetry(m: &CMatrix) -> f64 {
    let mut scale: f64 = 0.0;
    let mut diff: f64 = 0.0;
    for r in 0..m.rows {
        for c in 0..m.cols {
            scale = scale.max(m[(r, c)].norm());
            diff = diff.max((m[(r, c)] - m[(c, r)]).norm());
        }
    }
    diff / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn impedance_and_port_matrices_are_reciprocal(
        freq in 1e9f64..5e9,
        elements in 1usize..=4,
        half_segments in 2usize..=6,
        length in 0.3f64..0.6,
        radius in 0.001f64..0.005,
        spacings in prop::collection::vec(0.05f64..1.0, 3),
    ) {
        let lam = wavelength(freq).unwrap();
        let dipole = DipoleSpec::new(length * lam, radius * lam, 2 * half_segments).unwrap();
        let d: Vec<f64> = spacings[..elements - 1].iter().map(|s| s * lam).collect();
        let g = ArrayGeometry::from_spacings(dipole, &d, freq).unwrap();
        let system = assemble_impedance(&g).unwrap();
        prop_assert!(max_asymmetry(&system.impedance) <= 1e-10);
        let zp = port_reduce(&system).unwrap();
        prop_assert_eq!(zp.ports(), elements);
        prop_assert!(max_asymmetry(&zp.entries) <= 1e-10);
    }
}

proptest! {
    #[test]
    fn fusion_weights_form_a_simplex_and_output_is_convex(
        seed in any::<u64>(),
        side in 1usize..=6,
        cols in 1usize..=4,
        spread in 0.1f64..20.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = FusionParams::init(&mut rng, side);
        let mut random = |rng: &mut ChaCha8Rng| {
            Tensor2::from_fn(side, cols, |_, _| spread * rng.random_range(-1.0..1.0))
        };
        let xr = random(&mut rng);
        let xi = random(&mut rng);
        let rec = fuse(&xr, &xi, &params).unwrap();
        let f = &rec.fused;
        for k in 0..f.matrix.data.len() {
            let (ar, ai) = (f.alpha_r.data[k], f.alpha_i.data[k]);
            prop_assert!((0.0..=1.0).contains(&ar) && (0.0..=1.0).contains(&ai));
            prop_assert!((ar + ai - 1.0).abs() <= 1e-12);
            let (a, b) = (rec.map_r.output.data[k], rec.map_i.output.data[k]);
            let v = f.matrix.data[k];
            let tol = 1e-12 * a.abs().max(b.abs()).max(1.0);
            prop_assert!(v >= a.min(b) - tol && v <= a.max(b) + tol);
        }
    }

    #[test]
    fn physics_kernel_is_normalized_positive_and_centrally_symmetric(
        half in 1usize..=5,
        decay in 0.01f64..10.0,
    ) {
        let side = 2 * half + 1;
        let k = build_kernel(side, decay).unwrap().weights;
        prop_assert!((k.data.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(k.data.iter().all(|&w| w > 0.0));
        for i in 0..side {
            for j in 0..side {
                prop_assert_eq!(k.get(i, j), k.get(side - 1 - i, side - 1 - j));
                prop_assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
    }

    #[test]
    fn packing_round_trips_symmetric_matrices(
        m in 1usize..=12,
        values in prop::collection::vec(-1e3f64..1e3, 156),
    ) {
        let mut z = CMatrix::zeros(m, m);
        let mut k = 0;
        for p in 0..m {
            for q in p..m {
                let v = Complex64::new(values[k], values[k + 78]);
                z[(p, q)] = v;
                z[(q, p)] = v;
                k += 1;
            }
        }
        let packed = pack_upper(&z).unwrap();
        prop_assert_eq!(packed.len(), packed_len(m));
        prop_assert_eq!(unpack_upper(m, &packed).unwrap(), z);
    }

    #[test]
    fn sampled_spacings_always_satisfy_the_constraints(
        seed in any::<u64>(),
        m in 2usize..=40,
        d1_min in 0.05f64..0.3,
        width in 0.05f64..0.5,
        pair_frac in 0.0f64..1.0,
    ) {
        let d1_max = d1_min + width;
        let c = SpacingConstraints {
            d1_min,
            d1_max,
            pair_sum_min: d1_max + pair_frac * d1_max,
            cutoff: 0.6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = sample_spacings(m, &c, &mut rng).unwrap();
        prop_assert_eq!(d.len(), m - 1);
        prop_assert!(c.violations(&d).is_empty(), "{:?}", c.violations(&d));
    }
}
