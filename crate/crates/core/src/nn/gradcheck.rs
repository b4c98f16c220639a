//! Central finite differences for checking analytic gradients.

/// Default step for `central_difference`.
pub const STEP: f64 = 1e-5;

/// d f / d x_i by (f(x + h e_i) - f(x - h e_i)) / 2h for every i.
pub fn central_difference(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + STEP;
            let up = f(&probe);
            probe[i] = orig - STEP;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// max_i |a_i - b_i| / max_i |b_i|, or the absolute error when `b` vanishes.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 1e-12 {
        diff / scale
    } else {
        diff
    }
}
