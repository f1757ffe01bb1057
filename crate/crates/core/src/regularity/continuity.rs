//! Empirical window length for stochastic uniform continuity.

use rayon::prelude::*;
use serde::Serialize;

use super::PairNorms;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::multiplicative::ProcessModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityProbe {
    pub window: f64,
    /// Largest over window starts of the fraction of trials with some pair
    /// inside the window outside `U_delta`.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// Largest probed window meeting the target (or the finest probe).
    pub window: f64,
    pub probes: Vec<ContinuityProbe>,
    /// Probability is nondecreasing in the window length.
    pub monotone: bool,
    /// Even the finest probe exceeds `alpha`.
    pub finest_exceeds: bool,
}

/// Probes dyadic window lengths `T, T/2, ...` down to one cell of a uniform
/// `cells`-cell grid on `[0, T]`, sliding grid-aligned windows over `[0, T]`.
pub fn uniform_continuity_probe(
    model: &ProcessModel,
    t_end: f64,
    cells: usize,
    delta: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<ContinuityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter("alpha must lie in (0, 1)".into()));
    }
    if !cells.is_power_of_two() {
        return Err(Error::Parameter("continuity probe needs a power-of-two cell count".into()));
    }
    model.group().check_radius(delta)?;
    let grid = TimeGrid::uniform(t_end, cells)?;
    let all: Vec<usize> = (0..=cells).collect();
    let spans: Vec<usize> = std::iter::successors(Some(cells), |m| (*m > 1).then_some(m / 2)).collect();

    // per trial and span: which window starts see an oscillation
    let hits: Vec<Vec<Vec<bool>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let path = model.sample(&grid, seed, t)?;
            let last = PairNorms::compute(&path, &all)?.last_outside(delta);
            Ok(spans
                .iter()
                .map(|&m| {
                    (0..=cells - m).map(|s| (s + 1..=s + m).any(|k| matches!(last[k], Some(j) if j >= s))).collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let probes: Vec<ContinuityProbe> = spans
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let probability = (0..=cells - m)
                .map(|s| hits.iter().filter(|h| h[i][s]).count() as f64 / trials as f64)
                .fold(0.0, f64::max);
            ContinuityProbe { window: t_end * m as f64 / cells as f64, probability }
        })
        .collect();
    let monotone = probes.windows(2).all(|w| w[1].probability <= w[0].probability);
    let found = probes.iter().find(|p| p.probability <= alpha);
    let finest = probes.last().expect("at least one probe");
    Ok(ContinuityReport { window: found.unwrap_or(finest).window, finest_exceeds: found.is_none(), probes, monotone })
}
