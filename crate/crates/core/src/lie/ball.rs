//! Ball powers `U_delta^n` and sampled certification of chart constants.

use serde::Serialize;

use super::{GroupElement, GroupInstance};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// A radius `r` with `U_delta^n` contained in `U_r`, or the marker that the
/// recursion left the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BallRadius {
    Within(f64),
    ChartExceeded,
}

impl BallRadius {
    pub fn radius(&self) -> Option<f64> {
        match self {
            BallRadius::Within(r) => Some(*r),
            BallRadius::ChartExceeded => None,
        }
    }
}

impl GroupInstance {
    /// Certified radius for `n`-fold products of elements of `U_delta`.
    ///
    /// Each step multiplies the running product (log norm `< r`) by one more
    /// ball element (log norm `< delta`) and bounds the BCH terms with the
    /// bracket constant `C`:
    /// `r + delta + C r delta / 2` for step 2, plus
    /// `C^2 r delta (r + delta) / 12` for step 3.
    pub fn ball_power_radius(&self, delta: f64, n: usize) -> Result<BallRadius> {
        if !(delta > 0.0) || delta >= self.chart.rho_double_prime {
            return Err(Error::Parameter(format!(
                "delta {delta} must lie in (0, rho'' = {})",
                self.chart.rho_double_prime
            )));
        }
        if n == 0 {
            return Err(Error::Parameter("ball power needs n >= 1".into()));
        }
        let c = self.chart.bracket_bound;
        let step = self.nilpotency_step();
        let mut r = delta;
        for _ in 1..n {
            let mut next = r + delta;
            if step >= 2 {
                next += 0.5 * c * r * delta;
            }
            if step >= 3 {
                next += c * c * r * delta * (r + delta) / 12.0;
            }
            if step > 3 {
                return Err(Error::UnsupportedStep(step));
            }
            r = next;
            if r >= self.chart.rho_prime {
                return Ok(BallRadius::ChartExceeded);
            }
        }
        Ok(BallRadius::Within(r))
    }
}

/// Checks `|[U, V]| <= C |U| |V|` on `samples` random pairs of mixed scale.
/// Returns the largest observed ratio.
pub fn certify_bracket_bound(group: &GroupInstance, samples: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..samples as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let su = 10f64.powf(rand::Rng::random_range(&mut rng, -2.0..1.0));
        let sv = 10f64.powf(rand::Rng::random_range(&mut rng, -2.0..1.0));
        let u = group.sample_gaussian(&mut rng, su);
        let v = group.sample_gaussian(&mut rng, sv);
        let denom = group.norm(&u)? * group.norm(&v)?;
        if denom == 0.0 {
            continue;
        }
        let ratio = group.norm(&group.bracket(&u, &v)?)? / denom;
        worst = worst.max(ratio);
    }
    if worst > group.chart.bracket_bound * (1.0 + 1e-12) {
        return Err(Error::Certification(format!("bracket ratio {worst} exceeds bound {}", group.chart.bracket_bound)));
    }
    Ok(worst)
}

/// Samples products of `n` elements of `U_delta` and checks that their
/// logarithms stay strictly inside the certified radius. Returns the largest
/// observed log norm.
pub fn certify_ball_power(group: &GroupInstance, delta: f64, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let radius = group
        .ball_power_radius(delta, n)?
        .radius()
        .ok_or_else(|| Error::Certification("ball power leaves the chart".into()))?;
    let mut worst = 0.0f64;
    for i in 0..samples as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let mut prod: GroupElement = group.identity();
        for _ in 0..n {
            let g = group.exp(&group.sample_in_ball(&mut rng, delta))?;
            prod = group.mul(&prod, &g)?;
        }
        worst = worst.max(group.chart_norm(&prod)?);
    }
    if worst >= radius {
        return Err(Error::Certification(format!(
            "sampled product log norm {worst} reaches certified radius {radius}"
        )));
    }
    Ok(worst)
}
