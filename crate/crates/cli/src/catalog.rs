//! Static description of every experiment kind.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub module: &'static str,
    pub params: &'static [&'static str],
    /// The property the experiment checks.
    pub verifies: &'static str,
}

const fn entry(
    name: &'static str,
    module: &'static str,
    params: &'static [&'static str],
    verifies: &'static str,
) -> CatalogEntry {
    CatalogEntry { name, module, params, verifies }
}

pub const MODULES: &[&str] =
    &["lie-core", "additive-sim", "multiplicative-sim", "regularity", "jump-analysis", "geometry-moments"];

pub const CATALOG: &[CatalogEntry] = &[
    entry(
        "kernel_suite",
        "lie-core",
        &["groups", "cases"],
        "group axioms, exp/log round trip, BCH against log(exp U exp V), Jacobi identity",
    ),
    entry("bracket_bound", "lie-core", &["groups", "samples"], "norm bound |[U,V]| <= C |U| |V| on the algebra"),
    entry(
        "ball_power",
        "lie-core",
        &["group", "delta", "powers", "samples"],
        "products of n elements of the delta-ball stay inside the certified chart radius",
    ),
    entry(
        "additive_moments",
        "additive-sim",
        &["model", "grid", "trials"],
        "driver increments match the model mean, variance and jump rate; refinement preserves cell sums",
    ),
    entry(
        "sample_path",
        "multiplicative-sim",
        &["model", "grid", "trial"],
        "exports one sampled group-valued path as CSV",
    ),
    entry(
        "cocycle",
        "multiplicative-sim",
        &["model", "grid", "samples", "tol", "construction", "trial", "fault"],
        "two-parameter cocycle identity x(s,t) x(t,u) = x(s,u) on grid triples",
    ),
    entry(
        "convergence",
        "multiplicative-sim",
        &["model", "grid", "refinements", "trials", "expect"],
        "product of exponentials over refining grids converges to the closed-form Heisenberg process",
    ),
    entry(
        "oscillation_exhaustive",
        "regularity",
        &["model", "t_end", "delta", "max_points", "instances"],
        "the oscillation-count recursion equals brute-force chain enumeration on every window",
    ),
    entry(
        "oscillation_axioms",
        "regularity",
        &["model", "grid", "delta", "instances"],
        "oscillation count is monotone in the index set and almost additive under concatenation",
    ),
    entry(
        "maximum_oscillation",
        "regularity",
        &["model", "grid", "delta", "trials"],
        "maximal inequality (1 - alpha) P(some x(j,n) far) <= P(x(0,n) far)",
    ),
    entry(
        "largest_step",
        "regularity",
        &["model", "grid", "delta", "trials"],
        "a large step between any grid pair forces a large step to the endpoint",
    ),
    entry(
        "expectation_bound",
        "regularity",
        &["model", "grid", "delta", "trials"],
        "mean oscillation count <= alpha / (1 - alpha) and geometric tail of the count",
    ),
    entry(
        "continuity_probe",
        "regularity",
        &["model", "t_end", "cells", "delta", "alpha", "trials"],
        "uniform stochastic continuity: a window length with small escape probability exists",
    ),
    entry(
        "detector_fidelity",
        "jump-analysis",
        &["model", "grid", "epsilon", "trials", "min_precision", "min_recall"],
        "large-increment detection recovers the driver jumps",
    ),
    entry(
        "poisson_battery",
        "jump-analysis",
        &["model", "grid", "epsilon", "trials"],
        "hitting counts of a jump set form a Poisson process: exponential gaps, unit dispersion, independent windows",
    ),
    entry(
        "restart_probe",
        "jump-analysis",
        &["model", "grid", "epsilon", "h", "trials", "expect"],
        "strong Markov restart at the first jump time matches the fixed-time increment law",
    ),
    entry(
        "step_certification",
        "geometry-moments",
        &["group", "delta", "samples"],
        "every step-count factorisation multiplies back to its element with factors in the delta-ball",
    ),
    entry(
        "step_triangle",
        "geometry-moments",
        &["group", "delta", "samples"],
        "step count is subadditive, zero at the identity and invariant under inversion",
    ),
    entry(
        "gauge_triangle",
        "geometry-moments",
        &["group", "triples", "fallback_delta"],
        "the gauge distance is a left-invariant symmetric metric",
    ),
    entry(
        "bounded_jumps",
        "geometry-moments",
        &["model", "delta", "power"],
        "every driver jump lies in the given power of the delta-ball",
    ),
    entry(
        "exp_moment",
        "geometry-moments",
        &["model", "grid", "alpha", "delta", "jump_power", "trials", "window"],
        "finite exponential moment of the sup step count for bounded jumps",
    ),
    entry(
        "tail_decay",
        "geometry-moments",
        &["model", "grid", "alpha", "delta", "jump_power", "trials", "window"],
        "geometric decay of the sup step-count tail at rate q",
    ),
    entry(
        "metric_modulus",
        "geometry-moments",
        &["model", "grid", "alpha", "windows", "trials"],
        "exponential moment of the gauge distance vanishes as the window shrinks",
    ),
];

pub fn entries(module: Option<&str>) -> Vec<&'static CatalogEntry> {
    CATALOG.iter().filter(|e| module.is_none_or(|m| e.module == m)).collect()
}

pub fn module_of(kind: &str) -> &'static str {
    CATALOG.iter().find(|e| e.name == kind).map(|e| e.module).unwrap_or("unknown")
}

/// Plain-text listing, one experiment per line.
pub fn render_text(entries: &[&CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{:<24} {:<20} {}\n", e.name, e.module, e.verifies));
        out.push_str(&format!("{:<24} params: {}\n", "", e.params.join(", ")));
    }
    out
}
