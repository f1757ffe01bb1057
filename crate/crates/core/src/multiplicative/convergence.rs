//! Product-limit convergence under dyadic refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{heisenberg_exact, product_exponential, stack_heisenberg, TwoParameter};
use crate::additive::{sample_additive_trial, AdditivePath, DriverSpace, LevyModel};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{heisenberg::conjugate_exponent, GroupInstance, GroupKind};
use crate::rng::derive_seed;
use crate::stats::linear_fit;

/// Independent drivers for the `x`, `y` and central blocks of a Heisenberg
/// process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergModels {
    pub x: LevyModel,
    pub y: LevyModel,
    pub z: LevyModel,
}

impl HeisenbergModels {
    fn is_pure_jump(&self) -> bool {
        [&self.x, &self.y, &self.z].iter().all(|m| m.drift.is_zero() && m.diffusion.iter().all(|s| *s == 0.0))
    }

    /// Zero drivers on the block spaces of a Heisenberg group:
    /// `l^p`, `l^q` and `R`.
    pub fn zero(group: &GroupInstance) -> Result<Self> {
        let (n, p) = match group.kind {
            GroupKind::Heisenberg { n, p } => (n, p),
            _ => return Err(Error::Unsupported("Heisenberg drivers need a Heisenberg group".into())),
        };
        let q = conjugate_exponent(p);
        Ok(HeisenbergModels {
            x: LevyModel::zero(DriverSpace::Lp { dim: n, p }),
            y: LevyModel::zero(DriverSpace::Lp { dim: n, p: q }),
            z: LevyModel::zero(DriverSpace::Lp { dim: 1, p: 1.0 }),
        })
    }

    /// Applies `f` to each of the three models.
    pub fn map(self, mut f: impl FnMut(LevyModel) -> Result<LevyModel>) -> Result<Self> {
        Ok(HeisenbergModels { x: f(self.x)?, y: f(self.y)?, z: f(self.z)? })
    }

    /// Samples one trial of the three drivers on `grid`.
    pub fn sample(&self, grid: &TimeGrid, seed: u64, trial: u64) -> [AdditivePath; 3] {
        let draw = |i: u64, m: &LevyModel| sample_additive_trial(m, grid, derive_seed(seed, &[i]), trial);
        [draw(0, &self.x), draw(1, &self.y), draw(2, &self.z)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Mesh of each refinement level, coarsest first; the last is the reference.
    pub meshes: Vec<f64>,
    pub rms_error: Vec<f64>,
    pub max_error: Vec<f64>,
    /// Least-squares slope of `log rms` against `log mesh`, excluding the
    /// reference level. `None` if some error is zero.
    pub slope: Option<f64>,
    pub trials: usize,
    /// Per trial: first level whose cells each hold at most one `X`/`Y` jump.
    pub separation_level: Vec<Option<usize>>,
    /// Pure-jump drivers only: every trial is exact (`<= 1e-12`) at and after
    /// its separation level.
    pub exact_after_separation: Option<bool>,
    /// Trials that separate strictly before the reference level.
    pub separated_trials: usize,
}

/// Tolerance for calling a product-limit error zero.
pub const EXACT_TOL: f64 = 1e-12;

fn separation_level(x: &AdditivePath, y: &AdditivePath, base: &TimeGrid, refinements: usize) -> Option<usize> {
    let mut times: Vec<f64> = x.true_jumps().iter().chain(y.true_jumps()).map(|j| j.time).collect();
    times.sort_by(f64::total_cmp);
    let mut grid = base.clone();
    for level in 0..=refinements {
        let mut cells: Vec<usize> = times.iter().filter_map(|t| grid.cell_of(*t)).collect();
        let before = cells.len();
        cells.dedup();
        if cells.len() == before {
            return Some(level);
        }
        grid = grid.refine();
    }
    None
}

/// Couples the drivers across `refinements` dyadic refinements of `base` and
/// measures, at each level, the largest chart distance over the base grid
/// points between the product of exponentials and the closed form on the
/// finest grid.
pub fn convergence_study(
    group: &GroupInstance,
    models: &HeisenbergModels,
    base: &TimeGrid,
    refinements: usize,
    trials: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    if !matches!(group.kind, GroupKind::Heisenberg { .. }) {
        return Err(Error::Unsupported("convergence study needs a Heisenberg group".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("convergence study needs trials > 0".into()));
    }
    let levels = refinements + 1;
    let per_trial: Vec<(Vec<f64>, Option<usize>)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<(Vec<f64>, Option<usize>)> {
            let mut drivers = models.sample(base, seed, trial);
            let sep = separation_level(&drivers[0], &drivers[1], base, refinements);
            let mut products = Vec::with_capacity(levels);
            for level in 0..levels {
                if level > 0 {
                    for (i, d) in drivers.iter_mut().enumerate() {
                        *d = d.refine(derive_seed(seed, &[100 + i as u64, level as u64, trial]));
                    }
                }
                let stacked = stack_heisenberg(&drivers[0], &drivers[1], &drivers[2])?;
                products.push(product_exponential(group, &stacked)?);
            }
            let [x, y, z] = &drivers;
            let reference = heisenberg_exact(group, x, y, z, x.grid())?;
            let errors = products
                .iter()
                .enumerate()
                .map(|(level, p)| {
                    let mut worst = 0.0f64;
                    for i in 0..=base.cells() {
                        let a = p.value(0, i << level)?;
                        let b = reference.value(0, i << refinements)?;
                        worst = worst.max(group.chart_distance(&a, &b)?);
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((errors, sep))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut meshes = Vec::with_capacity(levels);
    let mut grid = base.clone();
    for _ in 0..levels {
        meshes.push(grid.mesh());
        grid = grid.refine();
    }
    let rms_error: Vec<f64> =
        (0..levels).map(|l| (per_trial.iter().map(|(e, _)| e[l] * e[l]).sum::<f64>() / trials as f64).sqrt()).collect();
    let max_error: Vec<f64> = (0..levels).map(|l| per_trial.iter().map(|(e, _)| e[l]).fold(0.0, f64::max)).collect();
    let fitted = &rms_error[..refinements];
    let slope = if fitted.len() >= 2 && fitted.iter().all(|e| *e > 0.0) {
        let xs: Vec<f64> = meshes[..refinements].iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = fitted.iter().map(|e| e.ln()).collect();
        linear_fit(&xs, &ys).map(|f| f.slope)
    } else {
        None
    };
    let separation_level: Vec<Option<usize>> = per_trial.iter().map(|(_, s)| *s).collect();
    let exact_after_separation = models.is_pure_jump().then(|| {
        per_trial.iter().all(|(e, s)| match s {
            Some(s) => e[*s..].iter().all(|x| *x <= EXACT_TOL),
            None => true,
        })
    });
    let separated_trials = separation_level.iter().filter(|s| matches!(s, Some(l) if *l < refinements)).count();
    Ok(ConvergenceReport {
        meshes,
        rms_error,
        max_error,
        slope,
        trials,
        separation_level,
        exact_after_separation,
        separated_trials,
    })
}
