//! Monte Carlo estimates of `E sup e^{alpha upper(x^s_t)}`, its tail and the
//! modulus `E sup e^{alpha d(x_s, x_t)} - 1` for shrinking windows.

use rayon::prelude::*;
use serde::Serialize;

use super::{bounded_jumps_check, step_count_upper, GaugeMetric};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::multiplicative::{ProcessModel, TwoParameter};
use crate::rng::derive_seed;
use crate::stats::{linear_fit, mean, proportion_se, std_error};
use crate::verdict::Verdict;

/// Running-mean drift allowed over the last tenth of the trials.
pub const DRIFT_LIMIT: f64 = 0.05;
/// Exceedance counts below this are not fitted.
pub const MIN_TAIL_COUNT: usize = 10;
pub const TAIL_LEVELS: usize = 5;
pub const TAIL_SLOPE_SLACK: f64 = 0.1;
pub const MAX_WIDENINGS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSetup {
    pub grid: TimeGrid,
    /// Time window `(r, u)`; all grid points inside it are used.
    pub window: (f64, f64),
    pub alpha: f64,
    pub delta: f64,
    /// Jumps must lie in `U_delta^jump_power`.
    pub jump_power: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub se: f64,
    pub max_value: f64,
    /// `|mean - mean of the first 90%| / mean`.
    pub drift: f64,
    pub drift_ok: bool,
    /// Slope of log running maximum against log trial count.
    pub growth_slope: Option<f64>,
    pub growth_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub k: usize,
    pub gamma: f64,
    pub exceedance: f64,
    pub se: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub window: (f64, f64),
    pub widenings: usize,
    pub points: Vec<TailPoint>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// Largest over starts `s` of the fraction of trials leaving `U_delta`
    /// before the window ends.
    pub q_hat: f64,
    pub bound: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub window: f64,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub points: Vec<CurvePoint>,
    /// Each value is at most the previous one plus one combined standard
    /// error.
    pub decreasing: bool,
    /// Final value below a quarter of the first.
    pub shrinks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub alpha: f64,
    pub delta: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub trials: usize,
    pub seed: u64,
    pub jump_power: Option<usize>,
    pub estimate: Option<MomentEstimate>,
    pub tail: Option<TailFit>,
    pub curve: Option<ModulusCurve>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl MomentReport {
    fn new(alpha: f64, trials: usize, seed: u64) -> Self {
        MomentReport {
            alpha,
            delta: None,
            window: None,
            trials,
            seed,
            jump_power: None,
            estimate: None,
            tail: None,
            curve: None,
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
        }
    }

    /// `k,gamma,exceedance,se` rows of the tail fit.
    pub fn tail_csv(&self) -> String {
        let mut out = String::from("k,gamma,exceedance,se\n");
        for p in self.tail.iter().flat_map(|t| &t.points) {
            out.push_str(&format!("{},{},{},{}\n", p.k, p.gamma, p.exceedance, p.se));
        }
        out
    }
}

fn window_indices(grid: &TimeGrid, window: (f64, f64)) -> Result<(usize, usize)> {
    let (r, u) = window;
    if !(r < u) {
        return Err(Error::Parameter(format!("window needs r < u, got ({r}, {u})")));
    }
    if r < 0.0 || u > grid.end() {
        return Err(Error::Parameter(format!("window ({r}, {u}) outside [0, {}]", grid.end())));
    }
    let lo = grid.index_at_or_after(r)?;
    let hi = grid.points().partition_point(|&p| p <= u) - 1;
    if hi <= lo {
        return Err(Error::Parameter(format!("window ({r}, {u}) holds fewer than two grid points")));
    }
    Ok((lo, hi))
}

/// Step-count maxima of one trial, per start point of the window.
struct TrialScan {
    start_max: Vec<usize>,
}

impl TrialScan {
    fn pair_max(&self) -> usize {
        self.start_max.iter().copied().max().unwrap_or(0)
    }
}

fn scan(model: &ProcessModel, setup: &MomentSetup, lo: usize, hi: usize, trial: u64) -> Result<TrialScan> {
    let path = model.sample(&setup.grid, setup.seed, trial)?;
    let group = model.group();
    let mut start_max = vec![0; hi - lo];
    for (a, best) in start_max.iter_mut().enumerate() {
        for b in lo + a + 1..=hi {
            let up = step_count_upper(group, &path.value(lo + a, b)?, setup.delta)?.upper;
            *best = (*best).max(up);
        }
    }
    Ok(TrialScan { start_max })
}

fn scans(model: &ProcessModel, setup: &MomentSetup, window: (f64, f64)) -> Result<Vec<TrialScan>> {
    let (lo, hi) = window_indices(&setup.grid, window)?;
    (0..setup.trials as u64).into_par_iter().map(|t| scan(model, setup, lo, hi, t)).collect()
}

fn check_setup(model: &ProcessModel, setup: &MomentSetup) -> Result<usize> {
    if setup.trials < 32 {
        return Err(Error::Parameter("moment estimates need at least 32 trials".into()));
    }
    if !setup.alpha.is_finite() {
        return Err(Error::Parameter("alpha must be finite".into()));
    }
    window_indices(&setup.grid, setup.window)?;
    let bounded = bounded_jumps_check(model, setup.delta, setup.jump_power)?;
    if !bounded.pass {
        return Err(Error::Hypothesis(format!(
            "jumps need {} factors, above the allowed power {}",
            bounded.power, setup.jump_power
        )));
    }
    Ok(bounded.power)
}

fn base_report(setup: &MomentSetup, power: usize) -> MomentReport {
    let mut report = MomentReport::new(setup.alpha, setup.trials, setup.seed);
    report.delta = Some(setup.delta);
    report.window = Some(setup.window);
    report.jump_power = Some(power);
    report
}

/// Estimates `E sup_{s<t in window} e^{alpha upper(x^s_t, delta)}` over grid
/// pairs. Finiteness cannot be decided from samples, so the report carries
/// two stabilisation diagnostics instead: the drift of the running mean over
/// the last tenth of the trials and the growth rate of the running maximum.
pub fn exp_moment_estimate(model: &ProcessModel, setup: &MomentSetup) -> Result<MomentReport> {
    let power = check_setup(model, setup)?;
    let values: Vec<f64> =
        scans(model, setup, setup.window)?.iter().map(|s| (setup.alpha * s.pair_max() as f64).exp()).collect();
    let n = values.len();
    let m = mean(&values);
    let head = mean(&values[..n * 9 / 10]);
    let drift = (m - head).abs() / m;

    let mut running = Vec::with_capacity(n);
    let mut top = f64::NEG_INFINITY;
    for v in &values {
        top = top.max(*v);
        running.push(top);
    }
    let checkpoints: Vec<usize> =
        std::iter::successors(Some(16usize), |c| Some(c * 2)).take_while(|c| *c <= n).collect();
    let xs: Vec<f64> = checkpoints.iter().map(|c| (*c as f64).ln()).collect();
    let ys: Vec<f64> = checkpoints.iter().map(|c| running[c - 1].ln()).collect();
    let growth_slope = linear_fit(&xs, &ys).map(|f| f.slope);
    let growth_ok = growth_slope.is_none_or(|s| s < 1.0);

    let estimate = MomentEstimate {
        mean: m,
        se: std_error(&values),
        max_value: top,
        drift,
        drift_ok: drift < DRIFT_LIMIT,
        growth_slope,
        growth_ok,
    };
    let mut report = base_report(setup, power);
    report.verdict = Verdict::from_pass(estimate.drift_ok && estimate.growth_ok);
    report.estimate = Some(estimate);
    report.notes.push(format!(
        "diagnostic thresholds (drift < {DRIFT_LIMIT}, growth slope < 1) are conventions, not a finiteness proof"
    ));
    Ok(report)
}

/// Exceedances `max_s P(sup_t e^{alpha upper(x^s_t)} > gamma_k)` at
/// `gamma_k = e^{2 alpha} e^{alpha k (j+1)}`, `k = 0..4`, against the
/// geometric rate `q = max_s P(x^s_t leaves U_delta before the window ends)`.
/// The fitted slope of `log P` in `k` must not exceed `log q + 0.1`.
pub fn tail_decay_fit(model: &ProcessModel, setup: &MomentSetup) -> Result<MomentReport> {
    let power = check_setup(model, setup)?;
    if !(setup.alpha > 0.0) {
        return Err(Error::Parameter("tail fit needs alpha > 0".into()));
    }
    let mut report = base_report(setup, power);
    let n = setup.trials;
    let (r, u0) = setup.window;
    let mut widenings = 0;
    loop {
        let window = (r, (r + (u0 - r) * 2f64.powi(widenings as i32)).min(setup.grid.end()));
        let scans = scans(model, setup, window)?;
        let starts = scans[0].start_max.len();
        let count_above = |level: usize| -> usize {
            (0..starts).map(|a| scans.iter().filter(|s| s.start_max[a] > level).count()).max().unwrap_or(0)
        };
        // leaving U_delta is exactly upper >= 2
        let q_hat = count_above(1) as f64 / n as f64;
        let points: Vec<TailPoint> = (0..TAIL_LEVELS)
            .map(|k| {
                let level = 2 + k * (power + 1);
                let count = count_above(level);
                let p = count as f64 / n as f64;
                TailPoint {
                    k,
                    gamma: (setup.alpha * level as f64).exp(),
                    exceedance: p,
                    se: proportion_se(p, n),
                    count,
                }
            })
            .collect();
        let monotone = points.windows(2).all(|w| w[1].exceedance <= w[0].exceedance);
        let fitted: Vec<&TailPoint> = points.iter().filter(|p| p.count >= MIN_TAIL_COUNT).collect();
        let bound = q_hat.ln() + TAIL_SLOPE_SLACK;
        let mut tail =
            TailFit { window, widenings, points: Vec::new(), slope: None, slope_se: None, q_hat, bound, monotone };

        if points[0].count == 0 {
            tail.points = points;
            report.verdict = Verdict::from_pass(monotone);
            report.notes.push("no exceedance at any level; the tail is trivially geometric".into());
            report.tail = Some(tail);
            return Ok(report);
        }
        if fitted.len() >= 2 {
            let xs: Vec<f64> = fitted.iter().map(|p| p.k as f64).collect();
            let ys: Vec<f64> = fitted.iter().map(|p| p.exceedance.ln()).collect();
            let fit = linear_fit(&xs, &ys).expect("distinct levels");
            // delta method: var(log p) = (1 - p) / (n p), levels treated as independent
            let mx = mean(&xs);
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let var: f64 = fitted
                .iter()
                .zip(&xs)
                .map(|(p, x)| (x - mx).powi(2) * (1.0 - p.exceedance) / (n as f64 * p.exceedance))
                .sum::<f64>()
                / (sxx * sxx);
            tail.slope = Some(fit.slope);
            tail.slope_se = Some(var.sqrt());
            tail.points = points;
            report.verdict = Verdict::from_pass(monotone && fit.slope <= bound);
            report.tail = Some(tail);
            return Ok(report);
        }
        if widenings < MAX_WIDENINGS && window.1 < setup.grid.end() {
            widenings += 1;
            continue;
        }
        tail.points = points;
        report.verdict = Verdict::Inconclusive;
        report
            .notes
            .push(format!("fewer than two tail levels reach {MIN_TAIL_COUNT} exceedances after {widenings} widenings"));
        report.tail = Some(tail);
        return Ok(report);
    }
}

/// `E sup_{s<t in [0, w]} (e^{alpha d(x_s, x_t)} - 1)` for each window
/// length `w`, each estimated from its own trials. Needs the Koranyi gauge.
pub fn metric_modulus_curve(
    model: &ProcessModel,
    grid: &TimeGrid,
    alpha: f64,
    windows: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    let group = model.group();
    let metric = GaugeMetric::for_group(group, None)?;
    if windows.len() < 2 {
        return Err(Error::Parameter("modulus curve needs at least two windows".into()));
    }
    if trials < 2 {
        return Err(Error::Parameter("modulus curve needs at least two trials".into()));
    }
    let mut points = Vec::with_capacity(windows.len());
    for (i, &w) in windows.iter().enumerate() {
        let (lo, hi) = window_indices(grid, (0.0, w))?;
        let wseed = derive_seed(seed, &[i as u64]);
        let values: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let path = model.sample(grid, wseed, t)?;
                let mut best = f64::NEG_INFINITY;
                for a in lo..hi {
                    for b in a + 1..=hi {
                        let d = metric.gauge(group, &path.value(a, b)?)?;
                        best = best.max((alpha * d).exp_m1());
                    }
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        points.push(CurvePoint { window: w, value: mean(&values), se: std_error(&values) });
    }
    let decreasing = points.windows(2).all(|p| p[1].value <= p[0].value + (p[0].se.powi(2) + p[1].se.powi(2)).sqrt());
    let (first, last) = (points[0].value, points[points.len() - 1].value);
    let mut report = MomentReport::new(alpha, trials, seed);
    let shrinks = if first == 0.0 {
        report.notes.push("all values vanish; the modulus is identically zero".into());
        last == 0.0
    } else {
        last < first / 4.0
    };
    report.notes.push("the factor-4 decrease is a convention, not a limit proof".into());
    report.verdict = Verdict::from_pass(decreasing && shrinks);
    report.curve = Some(ModulusCurve { points, decreasing, shrinks });
    Ok(report)
}
