//! Hitting times of threshold jump sets, the jump counting process and its
//! Poisson checks, the log-jump additive process, and a restart probe at the
//! first hitting time.

use rayon::prelude::*;
use serde::Serialize;

use crate::additive::AdditivePath;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{GroupElement, GroupInstance};
use crate::multiplicative::{MultiplicativePath, ProcessModel, SampledProcess, TwoParameter};
use crate::stats::{bonferroni, correlation, ks_one_sample, ks_two_sample, mean, variance};
use crate::verdict::Verdict;

/// `A = {g : |log g| >= epsilon}`, with elements outside the log chart
/// counted as members. `A` misses `U_epsilon` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpSetSpec {
    pub epsilon: f64,
}

impl JumpSetSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Parameter("jump threshold must be positive".into()));
        }
        Ok(JumpSetSpec { epsilon })
    }

    pub fn contains(&self, group: &GroupInstance, g: &GroupElement) -> Result<bool> {
        match group.chart_norm(g) {
            Ok(n) => Ok(!(n < self.epsilon) || n >= group.chart.rho_prime),
            Err(Error::ChartDomain(_)) => Ok(true),
            Err(e) => Err(e),
        }
    }
}

/// Grid indices `k` whose cell increment `x^{t_{k-1}}_{t_k}` lies in `A`.
pub fn hitting_indices(path: &MultiplicativePath, a: &JumpSetSpec) -> Result<Vec<usize>> {
    let group = *path.group();
    let mut out = Vec::new();
    for (c, g) in path.cell_increments().iter().enumerate() {
        if a.contains(&group, g)? {
            out.push(c + 1);
        }
    }
    Ok(out)
}

/// Hitting times `tau_1 < tau_2 < ...` as right endpoints of the hit cells.
pub fn hitting_times(path: &MultiplicativePath, a: &JumpSetSpec) -> Result<Vec<f64>> {
    let pts = path.grid().points();
    Ok(hitting_indices(path, a)?.into_iter().map(|k| pts[k]).collect())
}

/// `nu_t(A) = #{n : tau_n <= t}` for sorted hitting times.
pub fn jump_count(times: &[f64], grid: &TimeGrid, t: f64) -> Result<usize> {
    if !(0.0..=grid.end()).contains(&t) {
        return Err(Error::Parameter(format!("time {t} outside [0, {}]", grid.end())));
    }
    Ok(times.partition_point(|&tau| tau <= t))
}

/// Pure-jump path with jump `log(x^{tau-}_tau)` at every hitting time.
pub fn log_jump_process(path: &MultiplicativePath, a: &JumpSetSpec) -> Result<AdditivePath> {
    let group = *path.group();
    let pts = path.grid().points();
    let mut jumps = Vec::new();
    for k in hitting_indices(path, a)? {
        let g = &path.cell_increments()[k - 1];
        let v = group.log(g).map_err(|_| Error::ChartDomain(format!("jump at tau = {} has no logarithm", pts[k])))?;
        if !(group.norm(&v)? < group.chart.rho_prime) {
            return Err(Error::ChartDomain(format!("jump at tau = {} leaves the log chart", pts[k])));
        }
        jumps.push((pts[k], v));
    }
    AdditivePath::from_jumps(path.grid(), group.dim(), &jumps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    /// True jumps with norm at least `2 epsilon`.
    pub scored_truth: usize,
    pub detections: usize,
    /// Scored truths whose cell was detected.
    pub true_positives: usize,
    /// Detections in cells holding no true jump.
    pub false_positives: usize,
    /// Detections in cells holding only jumps below `2 epsilon`; not scored.
    pub ambiguous: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Set when precision or recall is undefined.
    pub undefined: bool,
}

impl FidelityReport {
    fn empty() -> Self {
        FidelityReport {
            scored_truth: 0,
            detections: 0,
            true_positives: 0,
            false_positives: 0,
            ambiguous: 0,
            precision: None,
            recall: None,
            undefined: true,
        }
    }

    fn merge(&mut self, o: &FidelityReport) {
        self.scored_truth += o.scored_truth;
        self.detections += o.detections;
        self.true_positives += o.true_positives;
        self.false_positives += o.false_positives;
        self.ambiguous += o.ambiguous;
    }

    fn finish(mut self) -> Self {
        self.recall = (self.scored_truth > 0).then(|| self.true_positives as f64 / self.scored_truth as f64);
        let scored_detections = self.detections - self.ambiguous;
        self.precision = (scored_detections > 0)
            .then(|| (scored_detections - self.false_positives) as f64 / scored_detections as f64);
        self.undefined = self.recall.is_none() || self.precision.is_none();
        self
    }
}

/// Scores detected cells against the recorded driver jumps.
pub fn detector_fidelity(sample: &SampledProcess, a: &JumpSetSpec) -> Result<FidelityReport> {
    let group = *sample.path.group();
    let detected = hitting_indices(&sample.path, a)?;
    let cells = sample.path.grid().cells();
    // 0 = no jump, 1 = only small jumps, 2 = some scored jump
    let mut kind = vec![0u8; cells];
    let mut scored_cells = Vec::new();
    for j in &sample.jumps {
        let big = group.norm(&j.log)? >= 2.0 * a.epsilon;
        if big {
            scored_cells.push(j.cell);
        }
        kind[j.cell] = kind[j.cell].max(if big { 2 } else { 1 });
    }
    let is_detected = |c: usize| detected.binary_search(&(c + 1)).is_ok();
    let mut r = FidelityReport::empty();
    r.scored_truth = scored_cells.len();
    r.true_positives = scored_cells.iter().filter(|&&c| is_detected(c)).count();
    r.detections = detected.len();
    for k in &detected {
        match kind[k - 1] {
            0 => r.false_positives += 1,
            1 => r.ambiguous += 1,
            _ => {}
        }
    }
    Ok(r.finish())
}

/// Pools [`detector_fidelity`] counts over trials.
pub fn detector_fidelity_battery(
    model: &ProcessModel,
    grid: &TimeGrid,
    a: &JumpSetSpec,
    trials: usize,
    seed: u64,
) -> Result<FidelityReport> {
    let parts: Vec<FidelityReport> = (0..trials as u64)
        .into_par_iter()
        .map(|t| detector_fidelity(&model.sample_with_jumps(grid, seed, t)?, a))
        .collect::<Result<_>>()?;
    let mut total = FidelityReport::empty();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.finish())
}

/// Number of groups for aggregated KS tests.
pub const KS_GROUPS: usize = 20;
/// Aggregated p-value floor.
pub const KS_LEVEL: f64 = 0.01;
/// Fewer pooled events than this leaves a battery without a verdict.
pub const MIN_EVENTS: usize = 50;

/// Gaps between consecutive hitting times, the first measured from 0. The
/// censored gap after the last time is dropped.
pub fn interarrivals(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let gap = t - prev;
            prev = t;
            gap
        })
        .collect()
}

/// Maps each observed gap to `F(gap) / F(T - start)` with `F` the
/// `Exp(lambda)` CDF. A gap starting at `start` is only seen when it ends
/// before `T`, and under a Poisson law these values are i.i.d. uniform.
pub fn censored_uniforms(times: &[f64], lambda: f64, t_end: f64) -> Vec<f64> {
    let cdf = |x: f64| -(-lambda * x).exp_m1();
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let u = cdf(t - prev) / cdf(t_end - prev);
            prev = t;
            u
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpReport {
    pub trials: usize,
    pub total_jumps: usize,
    pub lambda_hat: f64,
    pub lambda_se: f64,
    /// Hitting times of trial 0.
    pub example_hitting_times: Vec<f64>,
    pub ks_p_values: Vec<f64>,
    pub ks_p_aggregated: f64,
    pub mean_count: f64,
    pub dispersion: f64,
    /// Dispersion is only judged when the mean count is at least 5.
    pub dispersion_checked: bool,
    pub window_correlation: f64,
    pub correlation_bound: f64,
    pub underpowered: bool,
    pub verdict: Verdict,
}

/// Poisson-law checks on the counting process `nu_t(A)`: exponential
/// interarrivals with rate `lambda_hat` (grouped KS on the censoring-adjusted
/// gaps, Bonferroni), unit dispersion of `nu_T`, and uncorrelated counts on
/// the two halves of `[0, T]`.
pub fn poisson_battery(
    model: &ProcessModel,
    grid: &TimeGrid,
    a: &JumpSetSpec,
    trials: usize,
    seed: u64,
) -> Result<JumpReport> {
    if !model.is_stationary() {
        return Err(Error::Hypothesis("Poisson battery needs a stationary model".into()));
    }
    if trials < KS_GROUPS {
        return Err(Error::Parameter(format!("Poisson battery needs at least {KS_GROUPS} trials")));
    }
    let t_end = grid.end();
    let times: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| hitting_times(&model.sample(grid, seed, t)?, a))
        .collect::<Result<_>>()?;
    let counts: Vec<f64> = times.iter().map(|t| t.len() as f64).collect();
    let total: usize = times.iter().map(|t| t.len()).sum();
    let lambda_hat = total as f64 / (trials as f64 * t_end);
    let lambda_se = (lambda_hat / (trials as f64 * t_end)).sqrt();
    let mean_count = mean(&counts);
    let dispersion = if mean_count > 0.0 { variance(&counts) / mean_count } else { f64::NAN };
    let half = 0.5 * t_end;
    let first: Vec<f64> = times.iter().map(|t| t.partition_point(|&x| x <= half) as f64).collect();
    let second: Vec<f64> = counts.iter().zip(&first).map(|(c, f)| c - f).collect();
    let window_correlation = correlation(&first, &second);
    let correlation_bound = 3.0 / (trials as f64).sqrt();

    let underpowered = total < MIN_EVENTS;
    let mut ks_p_values = Vec::new();
    if !underpowered {
        let per = trials / KS_GROUPS;
        for g in 0..KS_GROUPS {
            let end = if g + 1 == KS_GROUPS { trials } else { (g + 1) * per };
            let us: Vec<f64> =
                times[g * per..end].iter().flat_map(|t| censored_uniforms(t, lambda_hat, t_end)).collect();
            if us.is_empty() {
                ks_p_values.push(1.0);
                continue;
            }
            ks_p_values.push(ks_one_sample(&us, |x| x.clamp(0.0, 1.0)).p_value);
        }
    }
    let ks_p_aggregated = if ks_p_values.is_empty() { f64::NAN } else { bonferroni(&ks_p_values) };
    let dispersion_checked = mean_count >= 5.0;
    let verdict = if underpowered {
        Verdict::Inconclusive
    } else {
        Verdict::from_pass(
            ks_p_aggregated > KS_LEVEL
                && (!dispersion_checked || (dispersion - 1.0).abs() <= 0.1)
                && window_correlation.abs() <= correlation_bound,
        )
    };
    Ok(JumpReport {
        trials,
        total_jumps: total,
        lambda_hat,
        lambda_se,
        example_hitting_times: times[0].clone(),
        ks_p_values,
        ks_p_aggregated,
        mean_count,
        dispersion,
        dispersion_checked,
        window_correlation,
        correlation_bound,
        underpowered,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartReport {
    pub h: f64,
    /// Fixed comparison start time.
    pub s: f64,
    pub restart_samples: usize,
    pub fixed_samples: usize,
    pub ks_p_values: Vec<f64>,
    pub ks_p_aggregated: f64,
    pub rejected: bool,
    pub underpowered: bool,
    pub verdict: Verdict,
}

/// Compares the law of `|log x^{tau_1}_{tau_1 + h}|` (even trials) with that
/// of `|log x^s_{s+h}|` (odd trials) at `s = (T - h) / 2`, by grouped
/// two-sample KS tests. The verdict is a pass when the laws are not
/// distinguished.
pub fn restart_probe(
    model: &ProcessModel,
    grid: &TimeGrid,
    a: &JumpSetSpec,
    h: f64,
    trials: usize,
    seed: u64,
) -> Result<RestartReport> {
    let t_end = grid.end();
    if !(h > 0.0 && h < t_end) {
        return Err(Error::Parameter(format!("h must lie in (0, {t_end})")));
    }
    let s = grid.points()[grid.index_at_or_after(0.5 * (t_end - h))?];
    let group = *model.group();
    let rows: Vec<Option<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Option<f64>> {
            let path = model.sample(grid, seed, t)?;
            let start = if t % 2 == 0 {
                match hitting_times(&path, a)?.first() {
                    Some(&tau) => tau,
                    None => return Ok(None),
                }
            } else {
                s
            };
            if start + h > t_end {
                return Ok(None);
            }
            let j = grid.index_at_or_after(start)?;
            let k = grid.index_at_or_after(start + h)?;
            Ok(Some(group.chart_norm(&path.value(j, k)?)?))
        })
        .collect::<Result<_>>()?;
    let restart: Vec<(usize, f64)> =
        rows.iter().enumerate().filter(|(i, _)| i % 2 == 0).filter_map(|(i, r)| r.map(|v| (i, v))).collect();
    let fixed: Vec<(usize, f64)> =
        rows.iter().enumerate().filter(|(i, _)| i % 2 == 1).filter_map(|(i, r)| r.map(|v| (i, v))).collect();
    let underpowered = restart.len() < MIN_EVENTS || fixed.len() < MIN_EVENTS;
    let mut ks_p_values = Vec::new();
    if !underpowered {
        for g in 0..KS_GROUPS {
            let pick = |v: &[(usize, f64)]| -> Vec<f64> {
                v.iter().filter(|(i, _)| (i / 2) % KS_GROUPS == g).map(|(_, x)| *x).collect()
            };
            let (r, f) = (pick(&restart), pick(&fixed));
            ks_p_values.push(if r.is_empty() || f.is_empty() { 1.0 } else { ks_two_sample(&r, &f).p_value });
        }
    }
    let ks_p_aggregated = if ks_p_values.is_empty() { f64::NAN } else { bonferroni(&ks_p_values) };
    let rejected = !underpowered && ks_p_aggregated <= KS_LEVEL;
    Ok(RestartReport {
        h,
        s,
        restart_samples: restart.len(),
        fixed_samples: fixed.len(),
        ks_p_values,
        ks_p_aggregated,
        rejected,
        underpowered,
        verdict: if underpowered { Verdict::Inconclusive } else { Verdict::from_pass(!rejected) },
    })
}
