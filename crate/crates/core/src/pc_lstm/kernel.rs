use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor2;

/// Fixed convolution kernel whose weights decay away from the main diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsKernel {
    pub side: usize,
    pub decay: f64,
    /// Normalized to sum 1.
    pub weights: Tensor2,
}

/// Weight before normalization: 1 at the centre, exp(-decay |i - j|) / d elsewhere,
/// with d the Manhattan distance to the centre.
pub fn raw_kernel_weight(i: usize, j: usize, side: usize, decay: f64) -> f64 {
    let c = side / 2;
    let d = i.abs_diff(c) + j.abs_diff(c);
    if d == 0 {
        1.0
    } else {
        (-decay * i.abs_diff(j) as f64).exp() / d as f64
    }
}

pub fn build_kernel(side: usize, decay: f64) -> Result<PhysicsKernel> {
    if side < 3 || side % 2 == 0 {
        return Err(Error::domain(format!(
            "kernel side must be odd and >= 3, got {side}"
        )));
    }
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(Error::domain(format!(
            "kernel decay must be > 0, got {decay}"
        )));
    }
    let raw = Tensor2::from_fn(side, side, |i, j| raw_kernel_weight(i, j, side, decay));
    let total: f64 = raw.data.iter().sum();
    Ok(PhysicsKernel {
        side,
        decay,
        weights: raw.scale(1.0 / total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_three_unit_decay_by_hand() {
        let e = std::f64::consts::E;
        let expected_raw = [
            [0.5, 1.0 / e, (-2.0f64).exp() / 2.0],
            [1.0 / e, 1.0, 1.0 / e],
            [(-2.0f64).exp() / 2.0, 1.0 / e, 0.5],
        ];
        let sum: f64 = expected_raw.iter().flatten().sum();
        assert!((sum - 3.6068).abs() < 1e-4);
        let k = build_kernel(3, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((raw_kernel_weight(i, j, 3, 1.0) - expected_raw[i][j]).abs() < 1e-15);
                assert!((k.weights.get(i, j) - expected_raw[i][j] / sum).abs() < 1e-15);
            }
        }
        assert!((k.weights.get(1, 1) - 0.2772).abs() < 1e-4);
    }

    #[test]
    fn normalized_symmetric_and_peaked() {
        for side in [3, 5, 7, 9] {
            for decay in [0.1, 1.0, 3.0] {
                let k = build_kernel(side, decay).unwrap();
                assert!((k.weights.data.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let c = side / 2;
                for i in 0..side {
                    for j in 0..side {
                        assert_eq!(
                            k.weights.get(i, j),
                            k.weights.get(side - 1 - i, side - 1 - j)
                        );
                        assert!(
                            raw_kernel_weight(i, j, side, decay)
                                <= raw_kernel_weight(c, c, side, decay)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn strong_decay_concentrates_on_diagonal() {
        let k = build_kernel(5, 60.0).unwrap();
        let diag: f64 = (0..5).map(|i| k.weights.get(i, i)).sum();
        assert!(diag > 1.0 - 1e-12);
    }

    #[test]
    fn invalid_sides_rejected() {
        assert!(build_kernel(4, 1.0).is_err());
        assert!(build_kernel(1, 1.0).is_err());
        assert!(build_kernel(3, 0.0).is_err());
    }
}
