//! Executes one experiment against the core library and turns the core
//! report into a verdict, warnings, a JSON result and optional CSV tables.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use lieproc_core::additive::{additive_battery, sample_additive_trial};
use lieproc_core::grid::TimeGrid;
use lieproc_core::jumps::{detector_fidelity_battery, poisson_battery, restart_probe, JumpSetSpec};
use lieproc_core::lie::{certify_ball_power, certify_bracket_bound, kernel_suite, GroupInstance};
use lieproc_core::moments::{
    bounded_jumps_check, exp_moment_estimate, gauge_triangle_test, metric_modulus_curve, step_certification_test,
    step_triangle_test, tail_decay_fit, GaugeMetric, MomentReport, MomentSetup,
};
use lieproc_core::multiplicative::{
    convergence_study, heisenberg_exact, product_exponential, stack_heisenberg, verify_multiplicative,
    MultiplicativePath, ProcessModel,
};
use lieproc_core::regularity::{
    dp_exhaustive_check, mc_expectation_bound, mc_largest_step, mc_maximum_oscillation, oscillation_axioms_test,
    uniform_continuity_probe,
};
use lieproc_core::rng::derive_seed;
use lieproc_core::verdict::Verdict;
use lieproc_core::{Error, Result};

use crate::config::*;
use crate::resolve::Context;

/// Result of one experiment before it is written out.
#[derive(Debug, Clone)]
pub struct Done {
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    pub result: Value,
    /// `(suffix, contents)`; written as `<name>.<suffix>.csv`.
    pub tables: Vec<(String, String)>,
}

impl Done {
    fn new(verdict: Verdict, result: impl Serialize) -> Result<Self> {
        Ok(Done { verdict, warnings: Vec::new(), result: to_value(result)?, tables: Vec::new() })
    }

    fn warn(mut self, cond: bool, msg: impl Into<String>) -> Self {
        if cond {
            self.warnings.push(msg.into());
        }
        self
    }

    fn table(mut self, suffix: &str, csv: String) -> Self {
        self.tables.push((suffix.to_string(), csv));
        self
    }
}

fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidInput(format!("report serialisation: {e}")))
}

fn lookup<T>(found: std::result::Result<&T, crate::error::CliError>) -> Result<&T> {
    found.map_err(|e| Error::InvalidInput(e.to_string()))
}

impl Context {
    fn m(&self, name: &str) -> Result<&ProcessModel> {
        lookup(self.model(name, "model"))
    }

    fn g(&self, name: &str) -> Result<&GroupInstance> {
        lookup(self.group(name, "group"))
    }

    fn t(&self, name: &str) -> Result<&TimeGrid> {
        lookup(self.grid(name, "grid"))
    }
}

/// Certification errors are findings, not runtime failures.
fn certified(r: Result<f64>) -> Result<(Option<f64>, Option<String>)> {
    match r {
        Ok(v) => Ok((Some(v), None)),
        Err(Error::Certification(m)) => Ok((None, Some(m))),
        Err(e) => Err(e),
    }
}

fn sample_for_cocycle(ctx: &Context, c: &Cocycle, seed: u64) -> Result<MultiplicativePath> {
    let grid = ctx.t(&c.grid)?;
    match (ctx.m(&c.model)?, c.construction) {
        (ProcessModel::Product { group, driver }, Construction::Product) => {
            product_exponential(group, &sample_additive_trial(driver, grid, seed, c.trial))
        }
        (ProcessModel::Heisenberg { group, drivers }, construction) => {
            let [x, y, z] = drivers.sample(grid, seed, c.trial);
            match construction {
                Construction::Exact => heisenberg_exact(group, &x, &y, &z, grid),
                Construction::Product => product_exponential(group, &stack_heisenberg(&x, &y, &z)?),
            }
        }
        _ => Err(Error::Unsupported("the exact construction needs a Heisenberg model".into())),
    }
}

fn moment_setup(ctx: &Context, c: &Moment, seed: u64) -> Result<MomentSetup> {
    let grid = ctx.t(&c.grid)?.clone();
    let window = c.window.unwrap_or((grid.points()[0], grid.end()));
    Ok(MomentSetup { grid, window, alpha: c.alpha, delta: c.delta, jump_power: c.jump_power, trials: c.trials, seed })
}

fn moment_done(r: MomentReport) -> Result<Done> {
    let notes = r.notes.clone();
    let mut d = Done::new(r.verdict, &r)?;
    d.warnings.extend(notes);
    Ok(d)
}

pub fn execute(ctx: &Context, e: &ExperimentConfig) -> Result<Done> {
    let seed = e.seed;
    match &e.check {
        Check::KernelSuite(c) => {
            let reports = c
                .groups
                .par_iter()
                .enumerate()
                .map(|(i, g)| kernel_suite(ctx.g(g)?, c.cases, derive_seed(seed, &[i as u64])))
                .collect::<Result<Vec<_>>>()?;
            let pass = reports.iter().all(|r| r.pass);
            Done::new(Verdict::from_pass(pass), json!({ "groups": c.groups, "reports": reports }))
        }
        Check::BracketBound(c) => {
            let mut rows = Vec::new();
            let mut pass = true;
            for (i, name) in c.groups.iter().enumerate() {
                let g = ctx.g(name)?;
                let (worst, failure) = certified(certify_bracket_bound(g, c.samples, derive_seed(seed, &[i as u64])))?;
                pass &= failure.is_none();
                rows.push(json!({
                    "group": name,
                    "bound": g.chart.bracket_bound,
                    "worst_ratio": worst,
                    "failure": failure,
                }));
            }
            Done::new(Verdict::from_pass(pass), json!({ "rows": rows }))
        }
        Check::BallPower(c) => {
            let g = ctx.g(&c.group)?;
            let mut rows = Vec::new();
            let mut pass = true;
            for (i, &n) in c.powers.iter().enumerate() {
                let radius = g.ball_power_radius(c.delta, n)?.radius();
                let (worst, failure) =
                    certified(certify_ball_power(g, c.delta, n, c.samples, derive_seed(seed, &[i as u64])))?;
                pass &= failure.is_none();
                rows.push(json!({ "n": n, "radius": radius, "worst_log_norm": worst, "failure": failure }));
            }
            Done::new(Verdict::from_pass(pass), json!({ "delta": c.delta, "rows": rows }))
        }
        Check::AdditiveMoments(c) => {
            let (model, grid) = (ctx.m(&c.model)?, ctx.t(&c.grid)?);
            let reports = model
                .drivers()
                .iter()
                .enumerate()
                .map(|(i, d)| additive_battery(d, grid, c.trials, derive_seed(seed, &[i as u64])))
                .collect::<Result<Vec<_>>>()?;
            let verdict = Verdict::all(reports.iter().map(|r| r.verdict));
            Done::new(verdict, json!({ "drivers": reports }))
        }
        Check::SamplePath(c) => {
            let grid = ctx.t(&c.grid)?;
            let sampled = ctx.m(&c.model)?.sample_with_jumps(grid, seed, c.trial)?;
            let last = sampled.path.prefix().last().cloned();
            let csv = sampled.path.to_csv();
            Done::new(Verdict::Pass, json!({ "cells": grid.cells(), "jumps": sampled.jumps.len(), "terminal": last }))
                .map(|d| d.table("path", csv))
        }
        Check::Cocycle(c) => {
            let mut path = sample_for_cocycle(ctx, c, seed)?;
            if let Some(f) = &c.fault {
                let mut bad = path.cell_increments()[f.cell].clone();
                for (x, o) in bad.0.iter_mut().zip(&f.offset) {
                    *x += o;
                }
                path.corrupt_cell(f.cell, bad)?;
            }
            let r = verify_multiplicative(&path, c.samples, c.tol, derive_seed(seed, &[1]))?;
            let (j, k, l) = r.argmax_triple;
            Ok(Done::new(Verdict::from_pass(r.pass), &r)?
                .warn(!r.pass, format!("cocycle defect {:e} at triple ({j}, {k}, {l})", r.max_defect)))
        }
        Check::Convergence(c) => {
            let grid = ctx.t(&c.grid)?;
            let (group, drivers) = match ctx.m(&c.model)? {
                ProcessModel::Heisenberg { group, drivers } => (group, drivers),
                _ => return Err(Error::Unsupported("convergence needs a Heisenberg model".into())),
            };
            let r = convergence_study(group, drivers, grid, c.refinements, c.trials, seed)?;
            let pass = match c.expect {
                ConvergenceExpectation::Exact => r.exact_after_separation == Some(true),
                ConvergenceExpectation::Slope { min, max } => r.slope.is_some_and(|s| (min..=max).contains(&s)),
            };
            let mut csv = String::from("mesh,rms_error,max_error\n");
            for ((h, rms), mx) in r.meshes.iter().zip(&r.rms_error).zip(&r.max_error) {
                csv.push_str(&format!("{h},{rms},{mx}\n"));
            }
            let unseparated = r.trials - r.separated_trials;
            let exact = matches!(c.expect, ConvergenceExpectation::Exact);
            Ok(Done::new(Verdict::from_pass(pass), &r)?
                .warn(exact && unseparated > 0, format!("{unseparated} trials never separated their jumps"))
                .table("errors", csv))
        }
        Check::OscillationExhaustive(c) => {
            let r = dp_exhaustive_check(ctx.m(&c.model)?, c.t_end, c.delta, c.max_points, c.instances, seed)?;
            Done::new(Verdict::from_pass(r.pass), &r)
        }
        Check::OscillationAxioms(c) => {
            let r = oscillation_axioms_test(ctx.m(&c.model)?, ctx.t(&c.grid)?, c.delta, c.instances, seed)?;
            Done::new(Verdict::from_pass(r.pass), &r)
        }
        Check::MaximumOscillation(c) | Check::LargestStep(c) => {
            let (model, grid) = (ctx.m(&c.model)?, ctx.t(&c.grid)?);
            let r = if matches!(e.check, Check::MaximumOscillation(_)) {
                mc_maximum_oscillation(model, grid, c.delta, c.trials, seed)?
            } else {
                mc_largest_step(model, grid, c.delta, c.trials, seed)?
            };
            let witness = r.witness.clone();
            Ok(Done::new(r.verdict, &r)?.warn(witness.is_some(), witness.unwrap_or_default()))
        }
        Check::ExpectationBound(c) => {
            let r = mc_expectation_bound(ctx.m(&c.model)?, ctx.t(&c.grid)?, c.delta, c.trials, seed)?;
            Ok(Done::new(r.verdict, &r)?
                .warn(r.verdict == Verdict::Inconclusive, format!("alpha-hat {} too close to 1", r.alpha_hat)))
        }
        Check::ContinuityProbe(c) => {
            let r = uniform_continuity_probe(ctx.m(&c.model)?, c.t_end, c.cells, c.delta, c.alpha, c.trials, seed)?;
            let verdict = if !r.monotone {
                Verdict::Fail
            } else if r.finest_exceeds {
                Verdict::Inconclusive
            } else {
                Verdict::Pass
            };
            Ok(Done::new(verdict, &r)?.warn(r.finest_exceeds, "even the finest window exceeds alpha; refine the grid"))
        }
        Check::DetectorFidelity(c) => {
            let a = JumpSetSpec::new(c.epsilon)?;
            let r = detector_fidelity_battery(ctx.m(&c.model)?, ctx.t(&c.grid)?, &a, c.trials, seed)?;
            let verdict = match (r.precision, r.recall) {
                (Some(p), Some(q)) => Verdict::from_pass(p >= c.min_precision && q >= c.min_recall),
                _ => Verdict::Inconclusive,
            };
            Ok(Done::new(verdict, &r)?
                .warn(r.undefined, "precision or recall undefined: no scored jumps or detections"))
        }
        Check::PoissonBattery(c) => {
            let a = JumpSetSpec::new(c.epsilon)?;
            let r = poisson_battery(ctx.m(&c.model)?, ctx.t(&c.grid)?, &a, c.trials, seed)?;
            Ok(Done::new(r.verdict, &r)?
                .warn(r.underpowered, "too few hitting events for the interarrival test")
                .warn(!r.dispersion_checked, "mean count below 5; dispersion not judged"))
        }
        Check::RestartProbe(c) => {
            let a = JumpSetSpec::new(c.epsilon)?;
            let r = restart_probe(ctx.m(&c.model)?, ctx.t(&c.grid)?, &a, c.h, c.trials, seed)?;
            let verdict = if r.underpowered {
                Verdict::Inconclusive
            } else {
                Verdict::from_pass(r.rejected == (c.expect == Expectation::Reject))
            };
            Ok(Done::new(verdict, json!({ "expect": c.expect, "probe": r }))?
                .warn(r.underpowered, "too few restart samples"))
        }
        Check::StepCertification(c) => {
            let r = step_certification_test(ctx.g(&c.group)?, c.samples, c.delta, seed)?;
            Done::new(Verdict::from_pass(r.pass), &r)
        }
        Check::StepTriangle(c) => {
            let r = step_triangle_test(ctx.g(&c.group)?, c.samples, c.delta, seed)?;
            Ok(Done::new(Verdict::from_pass(r.pass), &r)?.warn(
                r.direct_excess > 0,
                format!("{} pairs where the direct count exceeds the sum (covered by concatenation)", r.direct_excess),
            ))
        }
        Check::GaugeTriangle(c) => {
            let g = ctx.g(&c.group)?;
            let metric = GaugeMetric::for_group(g, c.fallback_delta)?;
            let r = gauge_triangle_test(g, metric, c.triples, seed)?;
            Done::new(Verdict::from_pass(r.pass), json!({ "metric": metric, "report": r }))
        }
        Check::BoundedJumps(c) => {
            let r = bounded_jumps_check(ctx.m(&c.model)?, c.delta, c.power)?;
            Done::new(Verdict::from_pass(r.pass), &r)
        }
        Check::ExpMoment(c) => moment_done(exp_moment_estimate(ctx.m(&c.model)?, &moment_setup(ctx, c, seed)?)?),
        Check::TailDecay(c) => {
            let r = tail_decay_fit(ctx.m(&c.model)?, &moment_setup(ctx, c, seed)?)?;
            let csv = r.tail_csv();
            Ok(moment_done(r)?.table("tail", csv))
        }
        Check::MetricModulus(c) => {
            let r = metric_modulus_curve(ctx.m(&c.model)?, ctx.t(&c.grid)?, c.alpha, &c.windows, c.trials, seed)?;
            let mut csv = String::from("window,value,se\n");
            for p in r.curve.iter().flat_map(|cv| &cv.points) {
                csv.push_str(&format!("{},{},{}\n", p.window, p.value, p.se));
            }
            Ok(moment_done(r)?.table("curve", csv))
        }
    }
}
