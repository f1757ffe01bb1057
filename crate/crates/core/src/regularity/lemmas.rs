//! Monte Carlo batteries for the maximum-oscillation, largest-step and
//! expectation bounds. `U_delta^2` is replaced by the certified superset
//! `W = U_r` with `r` from [`GroupInstance::ball_power_radius`]; each check
//! below notes why that keeps the inequality one-sided.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::PairNorms;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{BallRadius, GroupInstance};
use crate::multiplicative::ProcessModel;
use crate::stats::{mean, proportion_se, std_error};
use crate::verdict::{Verdict, SE_SLACK};

/// `lhs <= rhs + slack` with `slack = 3 * se`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub trials: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub estimates: BTreeMap<String, f64>,
    pub witness: Option<String>,
}

fn superset_radius(group: &GroupInstance, delta: f64) -> Result<f64> {
    group.check_radius(delta)?;
    match group.ball_power_radius(delta, 2)? {
        BallRadius::Within(r) if r < group.chart.rho_prime => Ok(r),
        _ => Err(Error::Hypothesis(format!("U_{delta}^2 leaves the chart"))),
    }
}

fn per_trial<T: Send>(
    model: &ProcessModel,
    grid: &TimeGrid,
    trials: usize,
    seed: u64,
    f: impl Fn(&PairNorms) -> T + Sync,
) -> Result<Vec<T>> {
    let all: Vec<usize> = (0..=grid.cells()).collect();
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let path = model.sample(grid, seed, t)?;
            Ok(f(&PairNorms::compute(&path, &all)?))
        })
        .collect()
}

fn frac(flags: impl Iterator<Item = bool>, n: usize) -> f64 {
    flags.filter(|b| *b).count() as f64 / n as f64
}

/// `(1 - alpha) P(exists j: x^j_n not in U^2) <= P(x^0_n not in U)` with
/// `alpha = max_j P(x^0_j not in U)`. Testing with `W` in place of `U^2`
/// shrinks the left side, so a true inequality stays true.
pub fn mc_maximum_oscillation(
    model: &ProcessModel,
    grid: &TimeGrid,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    let r_w = superset_radius(model.group(), delta)?;
    let n = grid.cells();
    let rows = per_trial(model, grid, trials, seed, |p| {
        let from_start: Vec<bool> = (1..=n).map(|j| p.outside(0, j, delta)).collect();
        let into_end = (0..n).any(|j| p.outside(j, n, r_w));
        (from_start, into_end)
    })?;
    let mut alpha = 0.0;
    let mut alpha_at = 0;
    for j in 0..n {
        let a = frac(rows.iter().map(|r| r.0[j]), trials);
        if a > alpha {
            alpha = a;
            alpha_at = j + 1;
        }
    }
    let p_w = frac(rows.iter().map(|r| r.1), trials);
    let p_end = frac(rows.iter().map(|r| r.0[n - 1]), trials);
    let (se_a, se_w, se_end) = (proportion_se(alpha, trials), proportion_se(p_w, trials), proportion_se(p_end, trials));
    let lhs = (1.0 - alpha) * p_w;
    let se = (((1.0 - alpha) * se_w).powi(2) + (p_w * se_a).powi(2) + se_end.powi(2)).sqrt();
    let slack = SE_SLACK * se;
    let verdict = if alpha >= 1.0 { Verdict::Inconclusive } else { Verdict::from_pass(lhs <= p_end + slack) };
    let estimates = BTreeMap::from([
        ("alpha_hat".to_string(), alpha),
        ("alpha_index".to_string(), alpha_at as f64),
        ("p_exists_outside_w".to_string(), p_w),
        ("p_end_outside".to_string(), p_end),
        ("superset_radius".to_string(), r_w),
    ]);
    Ok(LemmaReport {
        lemma: "maximum_oscillation".into(),
        trials,
        seed,
        lhs,
        rhs: p_end,
        se,
        slack,
        verdict,
        estimates,
        witness: (verdict == Verdict::Fail).then(|| format!("alpha attained at index {alpha_at}")),
    })
}

/// `P(exists j < k <= n: x^j_k not in U^2) <= P(exists j: x^j_n not in U)`.
/// Using `W` shrinks the left-hand event.
pub fn mc_largest_step(
    model: &ProcessModel,
    grid: &TimeGrid,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    let r_w = superset_radius(model.group(), delta)?;
    let rows = per_trial(model, grid, trials, seed, |p| largest_step_events(p, delta, r_w))?;
    let lhs = frac(rows.iter().map(|r| r.0.is_some()), trials);
    let rhs = frac(rows.iter().map(|r| r.1), trials);
    let se = (proportion_se(lhs, trials).powi(2) + proportion_se(rhs, trials).powi(2)).sqrt();
    let slack = SE_SLACK * se;
    let verdict = Verdict::from_pass(lhs <= rhs + slack);
    let witness = rows.iter().enumerate().find_map(|(t, r)| match r {
        (Some((j, k)), false) => Some(format!("trial {t}: pair ({j}, {k}) outside W, no endpoint pair outside U")),
        _ => None,
    });
    let estimates = BTreeMap::from([
        ("p_pair_outside_w".to_string(), lhs),
        ("p_endpoint_outside_u".to_string(), rhs),
        ("superset_radius".to_string(), r_w),
    ]);
    Ok(LemmaReport { lemma: "largest_step".into(), trials, seed, lhs, rhs, se, slack, verdict, estimates, witness })
}

/// First pair `(j, k)` outside `W`, and whether some `x^j_n` is outside
/// `U_delta`.
pub(crate) fn largest_step_events(p: &PairNorms, delta: f64, r_w: f64) -> (Option<(usize, usize)>, bool) {
    let n = p.len() - 1;
    let pair = (1..=n).find_map(|k| (0..k).find(|&j| p.outside(j, k, r_w)).map(|j| (j, k)));
    (pair, (0..n).any(|j| p.outside(j, n, delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub m: usize,
    pub p_at_least_m: f64,
    pub p_at_least_one_pow_m: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub trials: usize,
    pub seed: u64,
    /// `histogram[c]` = trials with count `c`, over the estimation half.
    pub histogram: Vec<usize>,
    pub mean_count: f64,
    pub mean_se: f64,
    /// `P(O >= 1)` from the other half.
    pub alpha_hat: f64,
    pub alpha_se: f64,
    /// `alpha / (1 - alpha)`, when `alpha < 1`.
    pub bound: Option<f64>,
    pub bound_se: Option<f64>,
    pub slack: f64,
    pub tail: Vec<TailCheck>,
    pub verdict: Verdict,
}

/// `E[O] <= alpha / (1 - alpha)` with `alpha = P(O >= 1)`. The bound uses
/// the even trials and the mean the odd ones. The tail recursion
/// `P(O >= m) <= P(O >= 1)^m` is checked on all trials for `m <= 4`.
pub fn mc_expectation_bound(
    model: &ProcessModel,
    grid: &TimeGrid,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<OscillationReport> {
    model.group().check_radius(delta)?;
    if trials < 4 {
        return Err(Error::Parameter("expectation bound needs at least 4 trials".into()));
    }
    let counts = per_trial(model, grid, trials, seed, |p| p.count(delta))?;
    let bound_half: Vec<usize> = counts.iter().step_by(2).copied().collect();
    let est_half: Vec<f64> = counts.iter().skip(1).step_by(2).map(|c| *c as f64).collect();

    let alpha = frac(bound_half.iter().map(|c| *c >= 1), bound_half.len());
    let alpha_se = proportion_se(alpha, bound_half.len());
    let mean_count = mean(&est_half);
    let mean_se = if est_half.iter().all(|c| *c == est_half[0]) { 0.0 } else { std_error(&est_half) };
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max_count + 1];
    for c in &est_half {
        histogram[*c as usize] += 1;
    }

    let p_ge = |m: usize| frac(counts.iter().map(|c| *c >= m), trials);
    let p1 = p_ge(1);
    let se1 = proportion_se(p1, trials);
    let tail: Vec<TailCheck> = (2..=4)
        .map(|m| {
            let pm = p_ge(m);
            let pow = p1.powi(m as i32);
            let se = (proportion_se(pm, trials).powi(2) + (m as f64 * p1.powi(m as i32 - 1) * se1).powi(2)).sqrt();
            TailCheck { m, p_at_least_m: pm, p_at_least_one_pow_m: pow, se, pass: pm <= pow + SE_SLACK * se }
        })
        .collect();

    let vacuous = alpha >= 1.0 - 10.0 * alpha_se || alpha >= 1.0;
    let (bound, bound_se, slack, main) = if vacuous {
        (None, None, 0.0, Verdict::Inconclusive)
    } else {
        let b = alpha / (1.0 - alpha);
        let b_se = alpha_se / (1.0 - alpha).powi(2);
        let slack = SE_SLACK * (b_se.powi(2) + mean_se.powi(2)).sqrt();
        (Some(b), Some(b_se), slack, Verdict::from_pass(mean_count <= b + slack))
    };
    let verdict = Verdict::all(std::iter::once(main).chain(tail.iter().map(|t| Verdict::from_pass(t.pass))));
    Ok(OscillationReport {
        trials,
        seed,
        histogram,
        mean_count,
        mean_se,
        alpha_hat: alpha,
        alpha_se,
        bound,
        bound_se,
        slack,
        tail,
        verdict,
    })
}
