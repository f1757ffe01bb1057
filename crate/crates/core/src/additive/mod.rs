//! Additive driver processes: drift + scaled Brownian motion + compound
//! Poisson jumps, sampled on a time grid with the jumps recorded exactly.

mod check;

pub use check::{additive_battery, AdditiveReport};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{heisenberg, sample_in_ball_with, AlgebraVector, GroupInstance};
use crate::rng::{stream, Purpose};

/// The vector space a driver lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DriverSpace {
    /// The Lie algebra of a group instance, with its norm.
    Algebra(GroupInstance),
    /// `R^dim` with the `p`-norm (for the separate blocks of a Heisenberg driver).
    Lp { dim: usize, p: f64 },
}

impl DriverSpace {
    pub fn dim(&self) -> usize {
        match self {
            DriverSpace::Algebra(g) => g.dim(),
            DriverSpace::Lp { dim, .. } => *dim,
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            DriverSpace::Algebra(g) => g.norm_raw(v),
            DriverSpace::Lp { p, .. } => heisenberg::p_norm(v, *p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    /// Norm-radially uniform inside the open ball of the given radius.
    UniformOnBall {
        radius: f64,
    },
    FixedAtom(AlgebraVector),
    Discrete(Vec<(AlgebraVector, f64)>),
}

impl JumpLaw {
    /// Supremum of the norm over the support.
    pub fn support_radius(&self, space: &DriverSpace) -> f64 {
        match self {
            JumpLaw::UniformOnBall { radius } => *radius,
            JumpLaw::FixedAtom(v) => space.norm(&v.0),
            JumpLaw::Discrete(atoms) => {
                atoms.iter().filter(|(_, p)| *p > 0.0).map(|(v, _)| space.norm(&v.0)).fold(0.0, f64::max)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, space: &DriverSpace) -> AlgebraVector {
        match self {
            JumpLaw::UniformOnBall { radius } => sample_in_ball_with(rng, space.dim(), *radius, |v| space.norm(v)),
            JumpLaw::FixedAtom(v) => v.clone(),
            JumpLaw::Discrete(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v.clone();
                    }
                }
                atoms.last().map(|(v, _)| v.clone()).unwrap_or_else(|| AlgebraVector::zeros(space.dim()))
            }
        }
    }
}

/// Piecewise-constant clock speed: `rates[i]` on `[breaks[i], breaks[i+1])`,
/// the last rate extending to infinity. Drift, Brownian variance and jump
/// intensity all run on the resulting intrinsic clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaling {
    pub breaks: Vec<f64>,
    pub rates: Vec<f64>,
}

impl TimeScaling {
    pub fn new(breaks: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != rates.len() || breaks[0] != 0.0 {
            return Err(Error::InvalidInput("time scaling needs matching breaks/rates starting at 0".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time scaling breaks must increase".into()));
        }
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("time scaling rates must be finite and >= 0".into()));
        }
        Ok(TimeScaling { breaks, rates })
    }

    /// `int_a^b rate(t) dt`.
    pub fn elapsed(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (i, &rate) in self.rates.iter().enumerate() {
            let lo = self.breaks[i];
            let hi = self.breaks.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let (s, e) = (a.max(lo), b.min(hi));
            if e > s {
                total += rate * (e - s);
            }
        }
        total
    }

    /// The time `t` in `[a, b]` with `elapsed(a, t) = fraction * elapsed(a, b)`.
    pub fn invert(&self, a: f64, b: f64, fraction: f64) -> f64 {
        let mut remaining = fraction * self.elapsed(a, b);
        for (i, &rate) in self.rates.iter().enumerate() {
            let lo = self.breaks[i];
            let hi = self.breaks.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let (s, e) = (a.max(lo), b.min(hi));
            if e <= s || rate == 0.0 {
                continue;
            }
            let piece = rate * (e - s);
            if remaining <= piece {
                return (s + remaining / rate).min(b);
            }
            remaining -= piece;
        }
        b
    }
}

fn elapsed(scaling: &Option<TimeScaling>, a: f64, b: f64) -> f64 {
    match scaling {
        Some(s) => s.elapsed(a, b),
        None => b - a,
    }
}

/// Drift + diffusion + compound Poisson driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    pub space: DriverSpace,
    /// Drift per unit (intrinsic) time.
    pub drift: AlgebraVector,
    /// Brownian scale per coordinate direction.
    pub diffusion: Vec<f64>,
    pub jump_intensity: f64,
    pub jump_law: JumpLaw,
    /// `None` for a stationary model.
    pub time_scaling: Option<TimeScaling>,
}

impl LevyModel {
    /// The zero driver on `space`.
    pub fn zero(space: DriverSpace) -> Self {
        let d = space.dim();
        LevyModel {
            space,
            drift: AlgebraVector::zeros(d),
            diffusion: vec![0.0; d],
            jump_intensity: 0.0,
            jump_law: JumpLaw::FixedAtom(AlgebraVector::zeros(d)),
            time_scaling: None,
        }
    }

    pub fn with_drift(mut self, drift: AlgebraVector) -> Result<Self> {
        self.drift = drift;
        self.validate()?;
        Ok(self)
    }

    pub fn with_diffusion(mut self, diffusion: Vec<f64>) -> Result<Self> {
        self.diffusion = diffusion;
        self.validate()?;
        Ok(self)
    }

    /// Same Brownian scale in every coordinate direction.
    pub fn with_isotropic_diffusion(self, sigma: f64) -> Result<Self> {
        let d = self.space.dim();
        self.with_diffusion(vec![sigma; d])
    }

    pub fn with_jumps(mut self, intensity: f64, law: JumpLaw) -> Result<Self> {
        self.jump_intensity = intensity;
        self.jump_law = law;
        self.validate()?;
        Ok(self)
    }

    pub fn with_time_scaling(mut self, scaling: TimeScaling) -> Result<Self> {
        self.time_scaling = Some(scaling);
        self.validate()?;
        Ok(self)
    }

    pub fn is_stationary(&self) -> bool {
        self.time_scaling.is_none()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.space.dim();
        crate::error::check_dim(d, self.drift.dim())?;
        crate::error::check_dim(d, self.diffusion.len())?;
        if !self.drift.is_finite() {
            return Err(Error::InvalidInput("drift must be finite".into()));
        }
        if self.diffusion.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("diffusion coefficients must be finite and >= 0".into()));
        }
        if !(self.jump_intensity >= 0.0) || !self.jump_intensity.is_finite() {
            return Err(Error::InvalidInput("jump intensity must be finite and >= 0".into()));
        }
        match &self.jump_law {
            JumpLaw::UniformOnBall { radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidInput("ball radius must be positive".into()));
                }
            }
            JumpLaw::FixedAtom(v) => {
                crate::error::check_dim(d, v.dim())?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput("jump atom must be finite".into()));
                }
            }
            JumpLaw::Discrete(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("discrete jump law is empty".into()));
                }
                for (v, p) in atoms {
                    crate::error::check_dim(d, v.dim())?;
                    if !(*p >= 0.0) || !v.is_finite() {
                        return Err(Error::InvalidInput("bad discrete atom".into()));
                    }
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("jump probabilities sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Bounded-jumps mode: every jump must lie strictly inside `B_delta`.
    pub fn require_jumps_within(&self, delta: f64) -> Result<()> {
        if self.jump_intensity == 0.0 {
            return Ok(());
        }
        let r = self.jump_law.support_radius(&self.space);
        let ok = match self.jump_law {
            JumpLaw::UniformOnBall { .. } => r <= delta,
            _ => r < delta,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("jump support radius {r} not inside B_{delta}")))
        }
    }

    /// Mean number of jumps on `[0, t]`.
    pub fn expected_jumps(&self, t: f64) -> f64 {
        self.jump_intensity * elapsed(&self.time_scaling, 0.0, t)
    }
}

/// A jump drawn by the sampler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    /// Zero-based grid cell containing `time`.
    pub cell: usize,
    pub value: AlgebraVector,
}

/// Sampled driver: per-cell increments plus the ground-truth jump list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditivePath {
    grid: TimeGrid,
    increments: Vec<AlgebraVector>,
    true_jumps: Vec<JumpRecord>,
    // components kept for coupled refinement
    drift_parts: Vec<AlgebraVector>,
    brownian_parts: Vec<AlgebraVector>,
    diffusion: Vec<f64>,
    time_scaling: Option<TimeScaling>,
}

pub fn sample_additive(model: &LevyModel, grid: &TimeGrid, seed: u64) -> AdditivePath {
    sample_additive_trial(model, grid, seed, 0)
}

/// Samples one trial. Each cell draws from its own `(seed, trial, cell,
/// purpose)` streams, so the Brownian and jump parts are coupled across
/// models that differ only in the other part.
pub fn sample_additive_trial(model: &LevyModel, grid: &TimeGrid, seed: u64, trial: u64) -> AdditivePath {
    let d = model.dim();
    let n = grid.cells();
    let pts = grid.points();
    let mut increments = Vec::with_capacity(n);
    let mut drift_parts = Vec::with_capacity(n);
    let mut brownian_parts = Vec::with_capacity(n);
    let mut true_jumps = Vec::new();
    let has_diffusion = model.diffusion.iter().any(|s| *s > 0.0);

    for c in 0..n {
        let (a, b) = (pts[c], pts[c + 1]);
        let dl = elapsed(&model.time_scaling, a, b);
        let drift = model.drift.scale(dl);
        let brownian = if has_diffusion {
            let mut rng = stream(seed, trial, c as u64, Purpose::Diffusion);
            let sd = dl.sqrt();
            AlgebraVector(
                model
                    .diffusion
                    .iter()
                    .map(|s| {
                        let z: f64 = rng.sample(StandardNormal);
                        s * sd * z
                    })
                    .collect(),
            )
        } else {
            AlgebraVector::zeros(d)
        };
        let mut inc = drift.add(&brownian);

        let mean = model.jump_intensity * dl;
        if mean > 0.0 {
            let mut rng = stream(seed, trial, c as u64, Purpose::JumpCount);
            let count = Poisson::new(mean).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
            if count > 0 {
                let mut rng = stream(seed, trial, c as u64, Purpose::JumpDetail);
                let mut cell_jumps: Vec<JumpRecord> = (0..count)
                    .map(|_| {
                        // fraction in (0, 1] so the time lands in (a, b]
                        let frac = 1.0 - rng.random::<f64>();
                        let time = match &model.time_scaling {
                            Some(s) => s.invert(a, b, frac),
                            None => a + frac * (b - a),
                        }
                        .clamp(a, b);
                        let value = model.jump_law.sample(&mut rng, &model.space);
                        JumpRecord { time, cell: c, value }
                    })
                    .collect();
                cell_jumps.sort_by(|x, y| x.time.total_cmp(&y.time));
                for j in &cell_jumps {
                    inc.add_assign(&j.value);
                }
                true_jumps.extend(cell_jumps);
            }
        }
        increments.push(inc);
        drift_parts.push(drift);
        brownian_parts.push(brownian);
    }

    AdditivePath {
        grid: grid.clone(),
        increments,
        true_jumps,
        drift_parts,
        brownian_parts,
        diffusion: model.diffusion.clone(),
        time_scaling: model.time_scaling.clone(),
    }
}

impl AdditivePath {
    /// A pure-jump path with the given jumps (times in `[0, T]`).
    pub fn from_jumps(grid: &TimeGrid, dim: usize, jumps: &[(f64, AlgebraVector)]) -> Result<Self> {
        let n = grid.cells();
        let mut increments = vec![AlgebraVector::zeros(dim); n];
        let mut records = Vec::with_capacity(jumps.len());
        for (t, v) in jumps {
            crate::error::check_dim(dim, v.dim())?;
            let c = grid.cell_of(*t).ok_or_else(|| Error::Parameter(format!("jump time {t} outside the grid")))?;
            increments[c].add_assign(v);
            records.push(JumpRecord { time: *t, cell: c, value: v.clone() });
        }
        records.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(AdditivePath {
            grid: grid.clone(),
            drift_parts: vec![AlgebraVector::zeros(dim); n],
            brownian_parts: vec![AlgebraVector::zeros(dim); n],
            increments,
            true_jumps: records,
            diffusion: vec![0.0; dim],
            time_scaling: None,
        })
    }

    /// A path with prescribed cell increments and no recorded jumps.
    pub fn from_increments(grid: &TimeGrid, increments: Vec<AlgebraVector>) -> Result<Self> {
        if increments.len() != grid.cells() {
            return Err(Error::GridMismatch(format!("{} increments for {} cells", increments.len(), grid.cells())));
        }
        let dim = increments.first().map(|v| v.dim()).unwrap_or(0);
        for v in &increments {
            crate::error::check_dim(dim, v.dim())?;
        }
        Ok(AdditivePath {
            grid: grid.clone(),
            brownian_parts: vec![AlgebraVector::zeros(dim); increments.len()],
            drift_parts: increments.clone(),
            increments,
            true_jumps: vec![],
            diffusion: vec![0.0; dim],
            time_scaling: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.diffusion.len()
    }

    /// Increments `Delta X` of the cells, in order.
    pub fn increments(&self) -> &[AlgebraVector] {
        &self.increments
    }

    pub fn true_jumps(&self) -> &[JumpRecord] {
        &self.true_jumps
    }

    /// `X_{t_k} - X_{t_j}` as the sum of the cell increments in between.
    pub fn increment(&self, j: usize, k: usize) -> Result<AlgebraVector> {
        let n = self.grid.cells();
        if k > n {
            return Err(Error::Index { index: k, len: n + 1 });
        }
        if j > k {
            return Err(Error::InvalidInput(format!("increment needs j <= k, got {j} > {k}")));
        }
        let mut acc = AlgebraVector::zeros(self.dim());
        for v in &self.increments[j..k] {
            acc.add_assign(v);
        }
        Ok(acc)
    }

    /// Bisects every cell. Brownian mass is split by a Brownian bridge drawn
    /// from `seed`, drift in proportion to elapsed intrinsic time, and each
    /// recorded jump follows its timestamp. The two new increments of a cell
    /// sum to the old one up to round-off.
    pub fn refine(&self, seed: u64) -> AdditivePath {
        let n = self.grid.cells();
        let pts = self.grid.points();
        let fine_grid = self.grid.refine();
        let mut drift_parts = Vec::with_capacity(2 * n);
        let mut brownian_parts = Vec::with_capacity(2 * n);
        let has_diffusion = self.diffusion.iter().any(|s| *s > 0.0);

        for c in 0..n {
            let (a, b) = (pts[c], pts[c + 1]);
            let m = fine_grid.points()[2 * c + 1];
            let l1 = elapsed(&self.time_scaling, a, m);
            let l2 = elapsed(&self.time_scaling, m, b);
            let l = l1 + l2;
            let w = if l > 0.0 { l1 / l } else { 0.5 };

            let drift = &self.drift_parts[c];
            let d1 = drift.scale(w);
            let d2 = drift.sub(&d1);

            let bm = &self.brownian_parts[c];
            let b1 = if has_diffusion && l > 0.0 {
                let mut rng = stream(seed, 0, c as u64, Purpose::Bridge);
                let sd = (l1 * l2 / l).sqrt();
                AlgebraVector(
                    bm.0.iter()
                        .zip(&self.diffusion)
                        .map(|(x, s)| {
                            let z: f64 = rng.sample(StandardNormal);
                            x * w + s * sd * z
                        })
                        .collect(),
                )
            } else {
                bm.scale(w)
            };
            let b2 = bm.sub(&b1);
            drift_parts.push(d1);
            drift_parts.push(d2);
            brownian_parts.push(b1);
            brownian_parts.push(b2);
        }

        let mut increments: Vec<AlgebraVector> =
            drift_parts.iter().zip(&brownian_parts).map(|(x, y)| x.add(y)).collect();
        let true_jumps: Vec<JumpRecord> = self
            .true_jumps
            .iter()
            .map(|j| {
                let m = fine_grid.points()[2 * j.cell + 1];
                let cell = if j.time <= m { 2 * j.cell } else { 2 * j.cell + 1 };
                increments[cell].add_assign(&j.value);
                JumpRecord { time: j.time, cell, value: j.value.clone() }
            })
            .collect();

        AdditivePath {
            grid: fine_grid,
            increments,
            true_jumps,
            drift_parts,
            brownian_parts,
            diffusion: self.diffusion.clone(),
            time_scaling: self.time_scaling.clone(),
        }
    }

    /// Sums consecutive pairs of cells (inverse of [`refine`](Self::refine)
    /// on the increments).
    pub fn coarse_sums(&self) -> Vec<AlgebraVector> {
        self.increments.chunks(2).map(|p| p.iter().skip(1).fold(p[0].clone(), |a, b| a.add(b))).collect()
    }

    /// One row per cell: `t_left,t_right,x_0..x_{d-1},jumps`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_left,t_right");
        for i in 0..self.dim() {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",jumps\n");
        let mut counts = vec![0usize; self.grid.cells()];
        for j in &self.true_jumps {
            counts[j.cell] += 1;
        }
        let pts = self.grid.points();
        for (c, inc) in self.increments.iter().enumerate() {
            out.push_str(&format!("{},{}", pts[c], pts[c + 1]));
            for x in &inc.0 {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(",{}\n", counts[c]));
        }
        out
    }
}

#[cfg(test)]
mod tests;
