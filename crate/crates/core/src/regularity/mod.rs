//! Oscillation counting on grids and Monte Carlo checks of the oscillation
//! lemmas.

mod continuity;
mod lemmas;

pub use continuity::{uniform_continuity_probe, ContinuityProbe, ContinuityReport};
pub use lemmas::{
    mc_expectation_bound, mc_largest_step, mc_maximum_oscillation, LemmaReport, OscillationReport, TailCheck,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::multiplicative::{ProcessModel, TwoParameter};
use crate::rng::{stream, Purpose};

/// Threshold and inclusive index window `[start, end]` of a count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationQuery {
    pub delta: f64,
    pub window: (usize, usize),
}

/// Chart norms `|log x^{t_a}_{t_b}|` for all pairs `a < b` of a list of grid
/// indices. A value outside the log chart is stored as infinity.
#[derive(Debug, Clone)]
pub struct PairNorms {
    len: usize,
    norms: Vec<f64>,
}

impl PairNorms {
    pub fn compute<P: TwoParameter + ?Sized>(path: &P, indices: &[usize]) -> Result<Self> {
        let len = indices.len();
        let group = path.group();
        let mut norms = Vec::with_capacity(len * len.saturating_sub(1) / 2);
        for a in 0..len {
            for b in a + 1..len {
                let g = path.value(indices[a], indices[b])?;
                let n = match group.chart_norm(&g) {
                    Ok(n) if n.is_finite() => n,
                    Ok(_) | Err(Error::ChartDomain(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                norms.push(n);
            }
        }
        Ok(PairNorms { len, norms })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn offset(&self, a: usize) -> usize {
        // rows 0..a hold (len-1) + (len-2) + ... + (len-a) entries
        a * (2 * self.len - a - 1) / 2
    }

    /// Norm for positions `a < b` in the index list.
    pub fn norm(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a < b && b < self.len);
        self.norms[self.offset(a) + (b - a - 1)]
    }

    /// Outside `U_radius` (strict ball), with undefined logs counted as outside.
    pub fn outside(&self, a: usize, b: usize, radius: f64) -> bool {
        !(self.norm(a, b) < radius)
    }

    /// Longest oscillation chain on the sub-list `positions` (increasing).
    pub fn count_on(&self, positions: &[usize], delta: f64) -> usize {
        longest_chain(positions.len(), |i, j| self.outside(positions[i], positions[j], delta))
    }

    pub fn count(&self, delta: f64) -> usize {
        longest_chain(self.len, |i, j| self.outside(i, j, delta))
    }

    /// For each position `k`, the largest `j < k` with the pair outside
    /// `U_radius`.
    pub fn last_outside(&self, radius: f64) -> Vec<Option<usize>> {
        (0..self.len).map(|k| (0..k).rev().find(|&j| self.outside(j, k, radius))).collect()
    }
}

/// Largest `m` with positions `p_0 < ... < p_m` and every consecutive pair
/// outside, by `best[k] = max(0, max_{j<k, outside(j,k)} best[j] + 1)`.
pub fn longest_chain(n: usize, outside: impl Fn(usize, usize) -> bool) -> usize {
    let mut best = vec![0usize; n];
    let mut top = 0;
    for k in 0..n {
        for j in 0..k {
            if best[j] + 1 > best[k] && outside(j, k) {
                best[k] = best[j] + 1;
            }
        }
        top = top.max(best[k]);
    }
    top
}

fn check_query<P: TwoParameter + ?Sized>(path: &P, q: &OscillationQuery) -> Result<()> {
    path.group().check_radius(q.delta)?;
    let (j, k) = q.window;
    if k >= path.len() {
        return Err(Error::Index { index: k, len: path.len() });
    }
    if j > k {
        return Err(Error::InvalidInput(format!("window start {j} after end {k}")));
    }
    Ok(())
}

/// Number of oscillations larger than `delta` on the grid window.
pub fn count_oscillations<P: TwoParameter + ?Sized>(path: &P, q: &OscillationQuery) -> Result<usize> {
    check_query(path, q)?;
    let indices: Vec<usize> = (q.window.0..=q.window.1).collect();
    Ok(PairNorms::compute(path, &indices)?.count(q.delta))
}

/// Number of oscillations on an arbitrary set of grid indices.
pub fn count_oscillations_on<P: TwoParameter + ?Sized>(path: &P, indices: &[usize], delta: f64) -> Result<usize> {
    path.group().check_radius(delta)?;
    let mut idx = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if let Some(&last) = idx.last() {
        if last >= path.len() {
            return Err(Error::Index { index: last, len: path.len() });
        }
    }
    Ok(PairNorms::compute(path, &idx)?.count(delta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomsReport {
    pub instances: usize,
    pub subgrid_violations: usize,
    pub exhaustion_violations: usize,
    pub concatenation_violations: usize,
    /// First failing instance and property, if any.
    pub witness: Option<(usize, String)>,
    pub pass: bool,
}

/// Checks the structural properties of the counter on random instances:
/// monotonicity under sub-grids, monotone exhaustion by a random sequence
/// reaching the full count, and `O(S u T) <= O(S) + O(T) + 1` when `S`
/// precedes `T`.
pub fn oscillation_axioms_test(
    model: &ProcessModel,
    grid: &TimeGrid,
    delta: f64,
    instances: usize,
    seed: u64,
) -> Result<AxiomsReport> {
    model.group().check_radius(delta)?;
    let n = grid.cells() + 1;
    let mut report = AxiomsReport {
        instances,
        subgrid_violations: 0,
        exhaustion_violations: 0,
        concatenation_violations: 0,
        witness: None,
        pass: true,
    };
    for i in 0..instances as u64 {
        let path = model.sample(grid, seed, i)?;
        let mut rng = stream(seed, i, 0, Purpose::Split);
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (start, end) = (a.min(b), a.max(b));
        let window: Vec<usize> = (start..=end).collect();
        let norms = PairNorms::compute(&path, &window)?;
        let all: Vec<usize> = (0..window.len()).collect();
        let full = norms.count_on(&all, delta);
        let mut note = |kind: &str, count: &mut usize| {
            *count += 1;
            if report.witness.is_none() {
                report.witness = Some((i as usize, kind.to_string()));
            }
        };

        let sub: Vec<usize> = all.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if norms.count_on(&sub, delta) > full {
            note("subgrid", &mut report.subgrid_violations);
        }

        let mut order = all.clone();
        order.shuffle(&mut rng);
        let mut prev = 0;
        let mut seen: Vec<usize> = Vec::with_capacity(order.len());
        let mut ok = true;
        for &p in &order {
            let at = seen.partition_point(|&x| x < p);
            seen.insert(at, p);
            let c = norms.count_on(&seen, delta);
            ok &= c >= prev;
            prev = c;
        }
        if !ok || prev != full {
            note("exhaustion", &mut report.exhaustion_violations);
        }

        let split = rng.random_range(0..window.len());
        let shared = rng.random_bool(0.5);
        let left: Vec<usize> = (0..=split).collect();
        let right: Vec<usize> =
            if shared { (split..window.len()).collect() } else { (split + 1..window.len()).collect() };
        let lhs = full;
        let rhs = norms.count_on(&left, delta) + norms.count_on(&right, delta) + 1;
        if lhs > rhs {
            note("concatenation", &mut report.concatenation_violations);
        }
    }
    report.pass = report.subgrid_violations + report.exhaustion_violations + report.concatenation_violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveReport {
    pub instances: usize,
    pub windows: usize,
    /// Instances with at least one disagreeing window.
    pub mismatches: usize,
    /// `(instance, window start, window end, dp, exhaustive)` of the first
    /// mismatch.
    pub witness: Option<(usize, usize, usize, usize, usize)>,
    pub pass: bool,
}

/// Longest chain by enumerating every subset of `0..n` (n <= 20).
fn exhaustive_chain(n: usize, outside: &[Vec<bool>]) -> usize {
    let mut best = 0;
    for mask in 1u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if chosen.windows(2).all(|w| outside[w[0]][w[1]]) {
            best = best.max(chosen.len() - 1);
        }
    }
    best
}

/// Compares the chain DP with exhaustive subset enumeration on every window
/// of random paths with `2..=max_points` grid points on `[0, t_end]`.
/// Membership is re-evaluated with `in_ball` for the exhaustive side.
pub fn dp_exhaustive_check(
    model: &ProcessModel,
    t_end: f64,
    delta: f64,
    max_points: usize,
    instances: usize,
    seed: u64,
) -> Result<ExhaustiveReport> {
    if !(2..=16).contains(&max_points) {
        return Err(Error::Parameter("exhaustive check needs 2 <= max_points <= 16".into()));
    }
    let group = model.group();
    group.check_radius(delta)?;
    let results: Vec<(usize, Option<(usize, usize, usize, usize)>)> = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i, 0, Purpose::Split);
            let points = rng.random_range(2..=max_points);
            let grid = TimeGrid::uniform(t_end, points - 1)?;
            let path = model.sample(&grid, seed, i)?;
            let mut outside = vec![vec![false; points]; points];
            for a in 0..points {
                for b in a + 1..points {
                    outside[a][b] = !group.in_ball(&path.value(a, b)?, delta)?;
                }
            }
            let mut windows = 0;
            for a in 0..points {
                for b in a..points {
                    windows += 1;
                    let idx: Vec<usize> = (a..=b).collect();
                    let dp = count_oscillations_on(&path, &idx, delta)?;
                    let sub: Vec<Vec<bool>> = (a..=b).map(|x| (a..=b).map(|y| outside[x][y]).collect()).collect();
                    let ex = exhaustive_chain(b - a + 1, &sub);
                    if dp != ex {
                        return Ok((windows, Some((a, b, dp, ex))));
                    }
                }
            }
            Ok((windows, None))
        })
        .collect::<Result<_>>()?;
    let mut report = ExhaustiveReport { instances, windows: 0, mismatches: 0, witness: None, pass: true };
    for (i, (w, bad)) in results.into_iter().enumerate() {
        report.windows += w;
        if let Some((a, b, dp, ex)) = bad {
            report.mismatches += 1;
            report.witness.get_or_insert((i, a, b, dp, ex));
        }
    }
    report.pass = report.mismatches == 0;
    Ok(report)
}

#[cfg(test)]
mod tests;
