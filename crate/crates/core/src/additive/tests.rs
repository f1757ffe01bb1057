use super::*;
use crate::verdict::Verdict;

fn line(dim: usize) -> DriverSpace {
    DriverSpace::Lp { dim, p: 2.0 }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[test]
fn brownian_cells_have_variance_sigma_squared_dt() {
    let model = LevyModel::zero(line(1)).with_diffusion(vec![1.5]).unwrap();
    let grid = TimeGrid::uniform(1.0, 8).unwrap();
    let xs: Vec<f64> = (0..4000).map(|t| sample_additive_trial(&model, &grid, 7, t).increments()[3].0[0]).collect();
    let (m, v) = mean_var(&xs);
    let expected: f64 = 1.5 * 1.5 / 8.0;
    // standard error of a sample variance is about var * sqrt(2 / n)
    assert!(m.abs() < 4.0 * (expected / 4000.0).sqrt());
    assert!((v - expected).abs() < 4.0 * expected * (2.0 / 4000.0f64).sqrt());
}

#[test]
fn jump_counts_are_poisson() {
    let atom = AlgebraVector(vec![1.0]);
    let model = LevyModel::zero(line(1)).with_jumps(3.0, JumpLaw::FixedAtom(atom)).unwrap();
    let grid = TimeGrid::uniform(2.0, 16).unwrap();
    let counts: Vec<f64> =
        (0..3000).map(|t| sample_additive_trial(&model, &grid, 11, t).true_jumps().len() as f64).collect();
    let (m, v) = mean_var(&counts);
    assert!((m - 6.0).abs() < 4.0 * (6.0f64 / 3000.0).sqrt());
    assert!((v / m - 1.0).abs() < 0.1);
    assert!((model.expected_jumps(2.0) - 6.0).abs() < 1e-12);
}

#[test]
fn jumps_land_in_their_cells_and_sum_into_increments() {
    let model = LevyModel::zero(line(2)).with_jumps(20.0, JumpLaw::UniformOnBall { radius: 0.3 }).unwrap();
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    let path = sample_additive(&model, &grid, 3);
    assert!(!path.true_jumps().is_empty());
    let mut sums = vec![AlgebraVector::zeros(2); 10];
    for j in path.true_jumps() {
        let pts = grid.points();
        assert!(j.time > pts[j.cell] && j.time <= pts[j.cell + 1]);
        assert!(model.space.norm(&j.value.0) < 0.3);
        sums[j.cell].add_assign(&j.value);
    }
    for (a, b) in sums.iter().zip(path.increments()) {
        assert!(a.sub(b).0.iter().all(|x| x.abs() < 1e-15));
    }
}

#[test]
fn jumps_are_coupled_across_diffusion_changes() {
    let base = LevyModel::zero(line(1)).with_jumps(5.0, JumpLaw::UniformOnBall { radius: 1.0 }).unwrap();
    let noisy = base.clone().with_diffusion(vec![0.7]).unwrap();
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let a = sample_additive(&base, &grid, 99);
    let b = sample_additive(&noisy, &grid, 99);
    assert_eq!(a.true_jumps(), b.true_jumps());
    assert_ne!(a.increments(), b.increments());
}

#[test]
fn sampling_is_deterministic() {
    let model = LevyModel::zero(line(3))
        .with_isotropic_diffusion(1.0)
        .unwrap()
        .with_jumps(2.0, JumpLaw::UniformOnBall { radius: 0.5 })
        .unwrap();
    let grid = TimeGrid::uniform(1.0, 64).unwrap();
    assert_eq!(sample_additive(&model, &grid, 5), sample_additive(&model, &grid, 5));
    assert_ne!(
        sample_additive_trial(&model, &grid, 5, 0).increments(),
        sample_additive_trial(&model, &grid, 5, 1).increments()
    );
}

#[test]
fn increment_is_sum_of_cells() {
    let model = LevyModel::zero(line(1)).with_drift(AlgebraVector(vec![2.0])).unwrap();
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let path = sample_additive(&model, &grid, 0);
    assert!((path.increment(1, 3).unwrap().0[0] - 1.0).abs() < 1e-15);
    assert!(path.increment(2, 2).unwrap().is_zero());
    assert!(matches!(path.increment(0, 5), Err(Error::Index { .. })));
    assert!(path.increment(3, 1).is_err());
}

#[test]
fn refinement_is_exactly_coupled() {
    let model = LevyModel::zero(line(2))
        .with_drift(AlgebraVector(vec![0.3, -1.0]))
        .unwrap()
        .with_isotropic_diffusion(1.0)
        .unwrap()
        .with_jumps(4.0, JumpLaw::UniformOnBall { radius: 1.0 })
        .unwrap();
    let grid = TimeGrid::uniform(2.0, 16).unwrap();
    let coarse = sample_additive(&model, &grid, 21);
    let fine = coarse.refine(22);
    assert_eq!(fine.grid().cells(), 32);
    for (a, b) in fine.coarse_sums().iter().zip(coarse.increments()) {
        assert!(a.sub(b).0.iter().all(|x| x.abs() < 1e-14));
    }
    assert_eq!(fine.true_jumps().len(), coarse.true_jumps().len());
    for j in fine.true_jumps() {
        let pts = fine.grid().points();
        assert!(j.time > pts[j.cell] && j.time <= pts[j.cell + 1]);
    }
}

#[test]
fn refinement_of_pure_drift_halves_cells() {
    let model = LevyModel::zero(line(1)).with_drift(AlgebraVector(vec![3.0])).unwrap();
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let fine = sample_additive(&model, &grid, 1).refine(2);
    for v in fine.increments() {
        assert!((v.0[0] - 3.0 / 8.0).abs() < 1e-15);
    }
}

#[test]
fn bridge_halves_have_brownian_variance() {
    let model = LevyModel::zero(line(1)).with_diffusion(vec![1.0]).unwrap();
    let grid = TimeGrid::uniform(1.0, 1).unwrap();
    let (first, second): (Vec<f64>, Vec<f64>) = (0..4000u64)
        .map(|t| {
            let fine = sample_additive_trial(&model, &grid, 4, t).refine(1000 + t);
            (fine.increments()[0].0[0], fine.increments()[1].0[0])
        })
        .unzip();
    let tol = 4.0 * 0.5 * (2.0 / 4000.0f64).sqrt();
    assert!((mean_var(&first).1 - 0.5).abs() < tol);
    assert!((mean_var(&second).1 - 0.5).abs() < tol);
    // independent increments: correlation near zero
    let (m1, v1) = mean_var(&first);
    let (m2, v2) = mean_var(&second);
    let cov = first.iter().zip(&second).map(|(a, b)| (a - m1) * (b - m2)).sum::<f64>() / 3999.0;
    assert!((cov / (v1 * v2).sqrt()).abs() < 4.0 / 4000.0f64.sqrt());
}

#[test]
fn time_scaling_moves_jump_mass() {
    let ts = TimeScaling::new(vec![0.0, 1.0], vec![1.0, 8.0]).unwrap();
    assert!((ts.elapsed(0.5, 1.5) - 4.5).abs() < 1e-15);
    assert!((ts.invert(0.5, 1.5, 0.5) - (1.0 + 1.75 / 8.0)).abs() < 1e-15);
    let model = LevyModel::zero(line(1))
        .with_jumps(2.0, JumpLaw::FixedAtom(AlgebraVector(vec![1.0])))
        .unwrap()
        .with_time_scaling(ts)
        .unwrap();
    assert!(!model.is_stationary());
    let grid = TimeGrid::uniform(2.0, 2).unwrap();
    let (mut early, mut late) = (0usize, 0usize);
    for t in 0..2000 {
        for j in sample_additive_trial(&model, &grid, 8, t).true_jumps() {
            if j.time <= 1.0 {
                early += 1;
            } else {
                late += 1;
            }
        }
    }
    let ratio = late as f64 / early as f64;
    assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn model_validation() {
    let sp = line(2);
    assert!(LevyModel::zero(sp).with_drift(AlgebraVector(vec![1.0])).is_err());
    assert!(LevyModel::zero(sp).with_diffusion(vec![1.0, -1.0]).is_err());
    assert!(LevyModel::zero(sp).with_jumps(-1.0, JumpLaw::UniformOnBall { radius: 1.0 }).is_err());
    let atoms = vec![(AlgebraVector(vec![1.0, 0.0]), 0.5), (AlgebraVector(vec![0.0, 1.0]), 0.4)];
    assert!(LevyModel::zero(sp).with_jumps(1.0, JumpLaw::Discrete(atoms)).is_err());
    let atoms = vec![(AlgebraVector(vec![1.0, 0.0]), 0.5), (AlgebraVector(vec![0.0, 2.0]), 0.5)];
    let m = LevyModel::zero(sp).with_jumps(1.0, JumpLaw::Discrete(atoms)).unwrap();
    assert!(m.require_jumps_within(2.5).is_ok());
    assert!(matches!(m.require_jumps_within(2.0), Err(Error::Hypothesis(_))));
    assert!(LevyModel::zero(sp).require_jumps_within(1e-9).is_ok());
}

#[test]
fn discrete_law_frequencies() {
    let atoms = vec![(AlgebraVector(vec![1.0]), 0.25), (AlgebraVector(vec![-1.0]), 0.75)];
    let model = LevyModel::zero(line(1)).with_jumps(50.0, JumpLaw::Discrete(atoms)).unwrap();
    let grid = TimeGrid::uniform(10.0, 10).unwrap();
    let path = sample_additive(&model, &grid, 2);
    let n = path.true_jumps().len() as f64;
    let ups = path.true_jumps().iter().filter(|j| j.value.0[0] > 0.0).count() as f64;
    assert!((ups / n - 0.25).abs() < 4.0 * (0.25 * 0.75 / n).sqrt());
}

#[test]
fn planted_paths_and_csv() {
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let path = AdditivePath::from_jumps(&grid, 1, &[(0.3, AlgebraVector(vec![2.0]))]).unwrap();
    assert_eq!(path.true_jumps()[0].cell, 1);
    assert_eq!(path.increments()[1].0[0], 2.0);
    assert!(AdditivePath::from_jumps(&grid, 1, &[(1.5, AlgebraVector(vec![2.0]))]).is_err());
    let csv = path.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t_left,t_right,x0,jumps");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[2], "0.25,0.5,2,1");
    assert!(AdditivePath::from_increments(&grid, vec![AlgebraVector(vec![1.0])]).is_err());
}

#[test]
fn algebra_space_uses_group_norm() {
    let g = GroupInstance::heisenberg(2, 3.0).unwrap();
    let sp = DriverSpace::Algebra(g);
    assert_eq!(sp.dim(), 5);
    let v = [1.0, 0.0, 0.0, 0.0, -2.0];
    assert!((sp.norm(&v) - 3.0).abs() < 1e-15);
}

#[test]
fn battery_matches_model_moments() {
    let grid = TimeGrid::uniform(2.0, 16).unwrap();
    let space = DriverSpace::Lp { dim: 2, p: 2.0 };
    let atoms = JumpLaw::Discrete(vec![(AlgebraVector(vec![1.0, 0.0]), 0.5), (AlgebraVector(vec![0.0, -2.0]), 0.5)]);
    let m = LevyModel::zero(space)
        .with_drift(AlgebraVector(vec![0.3, 0.0]))
        .unwrap()
        .with_diffusion(vec![0.5, 1.0])
        .unwrap()
        .with_jumps(1.5, atoms)
        .unwrap();
    let r = additive_battery(&m, &grid, 4000, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert_eq!(r.variance_z.len(), 2);
    assert!((r.jump_count_expected - 3.0).abs() < 1e-12);

    let zero = additive_battery(&LevyModel::zero(space), &grid, 20, 1).unwrap();
    assert_eq!(zero.verdict, Verdict::Pass);
    assert_eq!(zero.mean_z, vec![0.0, 0.0]);
}
