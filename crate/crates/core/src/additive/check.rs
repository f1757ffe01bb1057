//! Monte Carlo consistency of the sampler with the model's first two
//! moments, plus exact coupling under refinement.

use rayon::prelude::*;
use serde::Serialize;

use super::{elapsed, sample_additive_trial, JumpLaw, LevyModel};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::AlgebraVector;
use crate::rng::derive_seed;
use crate::stats::{mean, variance};
use crate::verdict::{Verdict, SE_SLACK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditiveReport {
    pub trials: usize,
    pub seed: u64,
    /// Per coordinate: `(estimate - expected) / SE` of the mean of `X_T`.
    pub mean_z: Vec<f64>,
    /// Same for the variance; empty when the jump law has no closed-form
    /// second moment.
    pub variance_z: Vec<f64>,
    pub jump_count_mean: f64,
    pub jump_count_expected: f64,
    pub jump_count_z: f64,
    /// Largest `|coarse_sums(refine(path)) - path|` over the checked trials.
    pub refinement_defect: f64,
    pub verdict: Verdict,
}

fn jump_moments(law: &JumpLaw, d: usize) -> (AlgebraVector, Option<Vec<f64>>) {
    match law {
        // symmetric, second moment depends on the norm's geometry
        JumpLaw::UniformOnBall { .. } => (AlgebraVector::zeros(d), None),
        JumpLaw::FixedAtom(v) => (v.clone(), Some(v.0.iter().map(|x| x * x).collect())),
        JumpLaw::Discrete(atoms) => {
            let mut m = AlgebraVector::zeros(d);
            let mut s = vec![0.0; d];
            for (v, p) in atoms {
                m.add_assign(&v.scale(*p));
                for (si, x) in s.iter_mut().zip(&v.0) {
                    *si += p * x * x;
                }
            }
            (m, Some(s))
        }
    }
}

/// Compares the terminal increment `X_T` and the jump count over `trials`
/// paths with their model values at `SE_SLACK` standard errors, and checks
/// that refinement preserves every cell sum.
pub fn additive_battery(model: &LevyModel, grid: &TimeGrid, trials: usize, seed: u64) -> Result<AdditiveReport> {
    model.validate()?;
    if trials < 10 {
        return Err(Error::Parameter("additive battery needs at least 10 trials".into()));
    }
    let d = model.dim();
    let n = grid.cells();
    let clock = elapsed(&model.time_scaling, 0.0, grid.end());
    let samples: Vec<(AlgebraVector, usize, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let path = sample_additive_trial(model, grid, seed, t);
            let total = path.increment(0, n)?;
            let refined = path.refine(derive_seed(seed, &[t]));
            let mut defect = 0.0f64;
            for (a, b) in refined.coarse_sums().iter().zip(path.increments()) {
                for (x, y) in a.0.iter().zip(&b.0) {
                    defect = defect.max((x - y).abs() / (1.0 + y.abs()));
                }
            }
            Ok((total, path.true_jumps().len(), defect))
        })
        .collect::<Result<_>>()?;

    let (jm, js) = jump_moments(&model.jump_law, d);
    let lam = model.jump_intensity * clock;
    let mut mean_z = Vec::with_capacity(d);
    let mut variance_z = Vec::new();
    for i in 0..d {
        let xs: Vec<f64> = samples.iter().map(|s| s.0 .0[i]).collect();
        let expected_mean = model.drift.0[i] * clock + lam * jm.0[i];
        let m = mean(&xs);
        let v = variance(&xs);
        mean_z.push(if v == 0.0 {
            if m == expected_mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (m - expected_mean) / (v / trials as f64).sqrt()
        });
        if let Some(second) = &js {
            // compound Poisson variance is lambda E[J^2]
            let expected_var = model.diffusion[i].powi(2) * clock + lam * second[i];
            let fourth: f64 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / trials as f64;
            let se = ((fourth - v * v).max(0.0) / trials as f64).sqrt();
            variance_z.push(if se == 0.0 {
                if (v - expected_var).abs() <= 1e-12 * (1.0 + expected_var) {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (v - expected_var) / se
            });
        }
    }
    let counts: Vec<f64> = samples.iter().map(|s| s.1 as f64).collect();
    let jump_count_mean = mean(&counts);
    let jump_count_z = if lam == 0.0 {
        if jump_count_mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (jump_count_mean - lam) / (lam / trials as f64).sqrt()
    };
    let refinement_defect = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    let within = |z: &f64| z.abs() <= SE_SLACK;
    let verdict = Verdict::from_pass(
        mean_z.iter().all(within)
            && variance_z.iter().all(within)
            && within(&jump_count_z)
            && refinement_defect <= 1e-12,
    );
    Ok(AdditiveReport {
        trials,
        seed,
        mean_z,
        variance_z,
        jump_count_mean,
        jump_count_expected: lam,
        jump_count_z,
        refinement_defect,
        verdict,
    })
}
