//! Word-length bounds `inf{m : g in U_delta^m}`, a left-invariant gauge
//! metric on the Heisenberg group and Monte Carlo checks of exponential
//! moments of these quantities along multiplicative processes.

mod estimates;

pub use estimates::{
    exp_moment_estimate, metric_modulus_curve, tail_decay_fit, CurvePoint, ModulusCurve, MomentEstimate, MomentReport,
    MomentSetup, TailFit, TailPoint,
};

use serde::Serialize;

use crate::additive::{DriverSpace, JumpLaw, LevyModel};
use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, GroupElement, GroupInstance, GroupKind};
use crate::multiplicative::ProcessModel;
use crate::rng::{stream, Purpose};

/// Legs are cut to this fraction of `delta`.
pub const LEG_FRACTION: f64 = 0.9;
/// Relative tolerance of the re-multiplication check.
pub const CERTIFY_TOL: f64 = 1e-10;
/// Refuse decompositions longer than this.
pub const MAX_FACTORS: usize = 10_000_000;

/// A certified decomposition `g = exp(f_1) ... exp(f_m)` with `|f_i| < delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCountResult {
    pub upper: usize,
    pub factors: Vec<AlgebraVector>,
}

/// Splits `v` into `ceil(|v| / step)` equal pieces.
fn legs(group: &GroupInstance, v: &AlgebraVector, step: f64) -> Result<Vec<AlgebraVector>> {
    let norm = group.norm(v)?;
    if norm == 0.0 {
        return Ok(Vec::new());
    }
    let m = (norm / step).ceil().max(1.0);
    if !(m <= MAX_FACTORS as f64) {
        return Err(Error::Parameter(format!("decomposition needs {m} factors, above the limit {MAX_FACTORS}")));
    }
    let m = m as usize;
    Ok(vec![v.scale(1.0 / m as f64); m])
}

fn product(group: &GroupInstance, factors: &[AlgebraVector]) -> Result<GroupElement> {
    factors.iter().try_fold(group.identity(), |acc, f| group.mul(&acc, &group.exp(f)?))
}

fn unit(dim: usize, i: usize, value: f64) -> AlgebraVector {
    let mut v = AlgebraVector::zeros(dim);
    v.0[i] = value;
    v
}

/// Coordinates swept level by level: the first level is removed by straight
/// legs (one leg group per entry of `first`), every higher coordinate
/// `target` either by straight legs or by the commutator of the directions
/// `left` and `right`, whose bracket is the `target` direction.
struct SweepPlan {
    first: Vec<Vec<usize>>,
    higher: Vec<Vec<(usize, usize, usize)>>,
}

fn sweep_plan(group: &GroupInstance) -> SweepPlan {
    match group.kind {
        GroupKind::Heisenberg { n, .. } => {
            SweepPlan { first: vec![(0..n).collect(), (n..2 * n).collect()], higher: vec![vec![(2 * n, 0, n)]] }
        }
        GroupKind::Unipotent { n } => {
            let idx = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
            SweepPlan {
                first: vec![(0..n - 1).map(|i| idx(i, i + 1)).collect()],
                higher: (2..n)
                    .map(|l| (0..n - l).map(|i| (idx(i, i + l), idx(i, i + 1), idx(i + 1, i + l))).collect())
                    .collect(),
            }
        }
    }
}

fn sweep(group: &GroupInstance, g: &GroupElement, log_g: &AlgebraVector, step: f64) -> Result<Vec<AlgebraVector>> {
    let dim = group.dim();
    let plan = sweep_plan(group);
    let mut factors = Vec::new();
    for block in &plan.first {
        let mut v = AlgebraVector::zeros(dim);
        for &i in block {
            v.0[i] = log_g.0[i];
        }
        factors.extend(legs(group, &v, step)?);
    }
    for level in &plan.higher {
        // everything below this level is already matched
        let rest = group.log(&group.between(&product(group, &factors)?, g)?)?;
        for &(target, left, right) in level {
            let c = rest.0[target];
            if c == 0.0 {
                continue;
            }
            let straight = legs(group, &unit(dim, target, c), step)?;
            let side = c.abs().sqrt();
            let a = unit(dim, left, side);
            let b = unit(dim, right, side * c.signum());
            let mut gadget = legs(group, &a, step)?;
            gadget.extend(legs(group, &b, step)?);
            gadget.extend(legs(group, &a.scale(-1.0), step)?);
            gadget.extend(legs(group, &b.scale(-1.0), step)?);
            factors.extend(if gadget.len() < straight.len() { gadget } else { straight });
        }
    }
    Ok(factors)
}

/// Checks that the factors multiply back to `g` and all lie in `B_delta`.
pub fn certify_factors(group: &GroupInstance, g: &GroupElement, factors: &[AlgebraVector], delta: f64) -> Result<()> {
    for (i, f) in factors.iter().enumerate() {
        let n = group.norm(f)?;
        if !(n < delta) {
            return Err(Error::Certification(format!("factor {i} has norm {n} >= {delta}")));
        }
    }
    let err = group.chart_distance(&product(group, factors)?, g)?;
    let scale = group.chart_norm(g)?.max(1.0);
    if !(err <= CERTIFY_TOL * scale) {
        return Err(Error::Certification(format!("factors reproduce g only to {err:e} (scale {scale})")));
    }
    Ok(())
}

/// Certified upper bound of `inf{m : g in U_delta^m}`.
///
/// Candidates are the one-parameter subdivision `exp(G/m)^m` and a
/// level-by-level sweep (straight legs in the generating directions, then
/// commutator gadgets `exp(A)exp(B)exp(-A)exp(-B) = exp([A, B])` for higher
/// coordinates). The shorter one is re-multiplied and returned.
pub fn step_count_upper(group: &GroupInstance, g: &GroupElement, delta: f64) -> Result<StepCountResult> {
    group.check_radius(delta)?;
    let log_g = group.log(g)?;
    let norm = group.norm(&log_g)?;
    if norm == 0.0 {
        return Ok(StepCountResult { upper: 0, factors: Vec::new() });
    }
    if norm < delta {
        return Ok(StepCountResult { upper: 1, factors: vec![log_g] });
    }
    let step = LEG_FRACTION * delta;
    let direct = legs(group, &log_g, step)?;
    let swept = sweep(group, g, &log_g, step)?;
    let factors = if swept.len() < direct.len() { swept } else { direct };
    certify_factors(group, g, &factors, delta)?;
    Ok(StepCountResult { upper: factors.len(), factors })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTriangleReport {
    pub samples: usize,
    pub delta: f64,
    /// Pairs where the concatenated factor lists failed to certify `gh`.
    pub concat_violations: usize,
    /// Pairs where the direct bound of `gh` exceeds `upper(g) + upper(h)`;
    /// informational, the concatenation certificate covers these.
    pub direct_excess: usize,
    pub identity_violations: usize,
    pub inverse_violations: usize,
    pub pass: bool,
}

fn sample_mixed(group: &GroupInstance, rng: &mut impl rand::Rng, delta: f64) -> Result<GroupElement> {
    let scale = delta * 10f64.powf(rng.random_range(-1.5..1.0));
    let v = group.sample_gaussian(rng, scale);
    group.exp(&v)
}

/// Subadditivity of the certified counter on random pairs: the factors of
/// `g` followed by those of `h` must certify `gh`, and the counter of `gh`
/// is `min(direct, upper(g) + upper(h))`. Also checks `h = e` and
/// `h = inv(g)`.
pub fn step_triangle_test(group: &GroupInstance, samples: usize, delta: f64, seed: u64) -> Result<StepTriangleReport> {
    let mut report = StepTriangleReport {
        samples,
        delta,
        concat_violations: 0,
        direct_excess: 0,
        identity_violations: 0,
        inverse_violations: 0,
        pass: false,
    };
    let e = group.identity();
    for i in 0..samples as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let g = sample_mixed(group, &mut rng, delta)?;
        let h = sample_mixed(group, &mut rng, delta)?;
        let ug = step_count_upper(group, &g, delta)?;
        let uh = step_count_upper(group, &h, delta)?;
        let gh = group.mul(&g, &h)?;
        let mut joined = ug.factors.clone();
        joined.extend(uh.factors.iter().cloned());
        if certify_factors(group, &gh, &joined, delta).is_err() {
            report.concat_violations += 1;
        }
        if step_count_upper(group, &gh, delta)?.upper > ug.upper + uh.upper {
            report.direct_excess += 1;
        }
        if step_count_upper(group, &group.mul(&g, &e)?, delta)?.upper != ug.upper {
            report.identity_violations += 1;
        }
        let back = group.mul(&g, &group.inv(&g)?)?;
        if step_count_upper(group, &back, delta)?.upper > 2 * ug.upper {
            report.inverse_violations += 1;
        }
    }
    report.pass = report.concat_violations == 0 && report.identity_violations == 0 && report.inverse_violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub samples: usize,
    pub delta: f64,
    /// Calls whose factor list failed certification, by either check.
    pub failures: usize,
    pub max_upper: usize,
    pub mean_upper: f64,
    /// Message of the first failure.
    pub witness: Option<String>,
    pub pass: bool,
}

/// Runs the counter on random elements of mixed scale and certifies every
/// returned factor list a second time, outside the counter.
pub fn step_certification_test(
    group: &GroupInstance,
    samples: usize,
    delta: f64,
    seed: u64,
) -> Result<CertificationReport> {
    group.check_radius(delta)?;
    let mut r =
        CertificationReport { samples, delta, failures: 0, max_upper: 0, mean_upper: 0.0, witness: None, pass: false };
    let mut total = 0usize;
    for i in 0..samples as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let g = sample_mixed(group, &mut rng, delta)?;
        let checked = step_count_upper(group, &g, delta).and_then(|s| {
            certify_factors(group, &g, &s.factors, delta)?;
            if s.upper != s.factors.len() {
                return Err(Error::Certification(format!("count {} for {} factors", s.upper, s.factors.len())));
            }
            Ok(s.upper)
        });
        match checked {
            Ok(u) => {
                total += u;
                r.max_upper = r.max_upper.max(u);
            }
            Err(Error::Certification(m)) => {
                r.failures += 1;
                r.witness.get_or_insert(format!("sample {i}: {m}"));
            }
            Err(e) => return Err(e),
        }
    }
    r.mean_upper = total as f64 / samples.max(1) as f64;
    r.pass = r.failures == 0;
    Ok(r)
}

/// Left-invariant distance `d(g, h) = N(inv(g) h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMetric {
    /// `N(x, y, z) = ((|x|^2 + |y|^2)^2 + 16 z^2)^(1/4)`, Heisenberg with `p = 2`.
    Koranyi,
    /// `delta * upper(w, delta)`. Not symmetric in general.
    WordScaled { delta: f64 },
}

impl GaugeMetric {
    /// The Koranyi gauge where available, otherwise the word-scaled fallback
    /// if one was requested.
    pub fn for_group(group: &GroupInstance, fallback_delta: Option<f64>) -> Result<Self> {
        match (group.kind, fallback_delta) {
            (GroupKind::Heisenberg { p: 2.0, .. }, _) => Ok(GaugeMetric::Koranyi),
            (_, Some(delta)) => {
                group.check_radius(delta)?;
                Ok(GaugeMetric::WordScaled { delta })
            }
            _ => Err(Error::Unsupported(
                "gauge metric needs Heisenberg with p = 2; enable the word-scaled fallback otherwise".into(),
            )),
        }
    }

    pub fn gauge(&self, group: &GroupInstance, w: &GroupElement) -> Result<f64> {
        match *self {
            GaugeMetric::Koranyi => {
                let GroupKind::Heisenberg { n, p } = group.kind else {
                    return Err(Error::Unsupported("Koranyi gauge on a non-Heisenberg group".into()));
                };
                if p != 2.0 {
                    return Err(Error::Unsupported(format!("Koranyi gauge needs p = 2, got {p}")));
                }
                let c = w.coords();
                let horizontal: f64 = c[..2 * n].iter().map(|v| v * v).sum();
                let z = c[2 * n];
                Ok((horizontal * horizontal + 16.0 * z * z).sqrt().sqrt())
            }
            GaugeMetric::WordScaled { delta } => Ok(delta * step_count_upper(group, w, delta)?.upper as f64),
        }
    }

    pub fn distance(&self, group: &GroupInstance, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        self.gauge(group, &group.between(g, h)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub triples: usize,
    /// Smallest `d(g,h) + d(h,k) - d(g,k)` seen.
    pub min_residual: f64,
    pub violations: usize,
    pub max_invariance_error: f64,
    pub max_symmetry_error: f64,
    pub pass: bool,
}

fn sample_wide(group: &GroupInstance, rng: &mut impl rand::Rng) -> Result<GroupElement> {
    let scale = 10f64.powf(rng.random_range(-2.0..1.0));
    group.exp(&group.sample_gaussian(rng, scale))
}

/// Samples random triples (and a random left translate) and checks the
/// triangle inequality, left invariance and symmetry of the gauge distance.
pub fn gauge_triangle_test(
    group: &GroupInstance,
    metric: GaugeMetric,
    triples: usize,
    seed: u64,
) -> Result<GaugeReport> {
    let mut r = GaugeReport {
        triples,
        min_residual: f64::INFINITY,
        violations: 0,
        max_invariance_error: 0.0,
        max_symmetry_error: 0.0,
        pass: false,
    };
    for i in 0..triples as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let g = sample_wide(group, &mut rng)?;
        let h = sample_wide(group, &mut rng)?;
        let k = sample_wide(group, &mut rng)?;
        let shift = sample_wide(group, &mut rng)?;
        let gk = metric.distance(group, &g, &k)?;
        let gh = metric.distance(group, &g, &h)?;
        let hk = metric.distance(group, &h, &k)?;
        let residual = gh + hk - gk;
        r.min_residual = r.min_residual.min(residual);
        if residual < -1e-12 * gk.max(1.0) {
            r.violations += 1;
        }
        let moved = metric.distance(group, &group.mul(&shift, &g)?, &group.mul(&shift, &h)?)?;
        r.max_invariance_error = r.max_invariance_error.max((moved - gh).abs() / gh.max(1.0));
        r.max_symmetry_error = r.max_symmetry_error.max((metric.distance(group, &h, &g)? - gh).abs());
    }
    r.pass = r.violations == 0 && r.max_invariance_error <= 1e-12;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedJumps {
    /// Certified `j` with every jump in `U_delta^j`.
    pub power: usize,
    pub pass: bool,
}

fn embed(model: &ProcessModel, block: usize, v: &AlgebraVector) -> AlgebraVector {
    match model {
        ProcessModel::Product { .. } => v.clone(),
        ProcessModel::Heisenberg { group, .. } => {
            let mut out = group.zero();
            let offset = block * (group.dim() / 2);
            out.0[offset..offset + v.dim()].copy_from_slice(&v.0);
            out
        }
    }
}

fn driver_jump_power(model: &ProcessModel, block: usize, driver: &LevyModel, delta: f64) -> Result<usize> {
    let group = model.group();
    if driver.jump_intensity == 0.0 {
        return Ok(0);
    }
    let step = LEG_FRACTION * delta;
    let atom_power = |v: &AlgebraVector| -> Result<usize> {
        Ok(step_count_upper(group, &group.exp(&embed(model, block, v))?, delta)?.upper)
    };
    match &driver.jump_law {
        // open ball: every point has norm < radius, so ceil(radius / step)
        // legs of norm < step suffice
        JumpLaw::UniformOnBall { radius } => Ok(if *radius <= delta { 1 } else { (radius / step).ceil() as usize }),
        JumpLaw::FixedAtom(v) => atom_power(v),
        JumpLaw::Discrete(atoms) => {
            atoms.iter().filter(|(_, p)| *p > 0.0).try_fold(0, |acc, (v, _)| Ok(acc.max(atom_power(v)?)))
        }
    }
}

/// Smallest certified `j` with all jumps in `U_delta^j`; passes iff
/// `j <= n_power`.
pub fn bounded_jumps_check(model: &ProcessModel, delta: f64, n_power: usize) -> Result<BoundedJumps> {
    model.group().check_radius(delta)?;
    let mut power = 0;
    for (block, driver) in model.drivers().into_iter().enumerate() {
        if let (ProcessModel::Heisenberg { .. }, DriverSpace::Algebra(_)) = (model, &driver.space) {
            return Err(Error::InvalidInput("Heisenberg block drivers must use l^p spaces".into()));
        }
        power = power.max(driver_jump_power(model, block, driver, delta)?);
    }
    Ok(BoundedJumps { power, pass: power <= n_power })
}
