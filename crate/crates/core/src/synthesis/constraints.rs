use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for floating-point comparisons against the bounds, in wavelengths.
const SLACK: f64 = 1e-9;

/// Layout rules for linear arrays; all values in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpacingConstraints {
    pub d1_min: f64,
    pub d1_max: f64,
    /// Lower bound on every pair of consecutive spacings.
    pub pair_sum_min: f64,
    /// Separations beyond this are treated as uncoupled.
    pub cutoff: f64,
}

impl Default for SpacingConstraints {
    fn default() -> Self {
        SpacingConstraints {
            d1_min: 0.1,
            d1_max: 0.5,
            pair_sum_min: 0.6,
            cutoff: 0.6,
        }
    }
}

impl SpacingConstraints {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d1_min > 0.0
            && self.d1_min < self.d1_max
            && self.pair_sum_min >= self.d1_max
            && self.pair_sum_min <= 2.0 * self.d1_max
            && self.cutoff > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "inconsistent spacing constraints {self:?}"
            )))
        }
    }

    /// Every violated rule, as human-readable messages naming the elements involved.
    pub fn violations(&self, spacings: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        for (k, &d) in spacings.iter().enumerate() {
            if d < self.d1_min - SLACK || d > self.d1_max + SLACK {
                out.push(format!(
                    "elements ({k}, {}): spacing {d:.4} outside [{}, {}]",
                    k + 1,
                    self.d1_min,
                    self.d1_max
                ));
            }
        }
        for (k, w) in spacings.windows(2).enumerate() {
            if w[0] + w[1] < self.pair_sum_min - SLACK {
                out.push(format!(
                    "elements ({k}, {}): separation {:.4} below {}",
                    k + 2,
                    w[0] + w[1],
                    self.pair_sum_min
                ));
            }
        }
        out
    }

    pub fn check(&self, spacings: &[f64]) -> Result<()> {
        let v = self.violations(spacings);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(v.join("; ")))
        }
    }
}

/// Adjacent spacings (in wavelengths) for `m_elements` elements. Each spacing is
/// drawn uniformly and accepted only if it keeps the pair sum feasible; the draw is
/// taken directly from the accepted interval, which has the same distribution as
/// rejecting uniform proposals but always terminates.
pub fn sample_spacings(
    m_elements: usize,
    constraints: &SpacingConstraints,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if m_elements < 2 {
        return Err(Error::domain(format!(
            "need at least 2 elements, got {m_elements}"
        )));
    }
    constraints.validate()?;
    let mut out: Vec<f64> = Vec::with_capacity(m_elements - 1);
    // A spacing followed by another must leave room for a partner within d1_max.
    let feasible_min = constraints.pair_sum_min - constraints.d1_max;
    for k in 0..m_elements - 1 {
        let mut lo = match out.last() {
            Some(prev) => constraints.d1_min.max(constraints.pair_sum_min - prev),
            None => constraints.d1_min,
        };
        if k + 2 < m_elements {
            lo = lo.max(feasible_min);
        }
        let d = if lo < constraints.d1_max {
            rng.random_range(lo..constraints.d1_max)
        } else {
            constraints.d1_max
        };
        out.push(d);
    }
    Ok(out)
}
