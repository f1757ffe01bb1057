use super::*;
use crate::additive::{sample_additive_trial, DriverSpace, JumpLaw, LevyModel};
use crate::stats::mean;

fn h(n: usize) -> GroupInstance {
    GroupInstance::heisenberg(n, 2.0).unwrap()
}

fn av(v: &[f64]) -> AlgebraVector {
    AlgebraVector(v.to_vec())
}

fn close(a: &GroupElement, b: &[f64], tol: f64) -> bool {
    a.0.len() == b.len() && a.0.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn noisy_models(group: &GroupInstance, sigma: f64, lambda: f64) -> HeisenbergModels {
    HeisenbergModels::zero(group)
        .unwrap()
        .map(|m| m.with_isotropic_diffusion(sigma)?.with_jumps(lambda, JumpLaw::UniformOnBall { radius: 0.5 }))
        .unwrap()
}

#[test]
fn zero_driver_gives_identity() {
    let g = h(2);
    let grid = TimeGrid::uniform(1.0, 8).unwrap();
    let path = AdditivePath::from_increments(&grid, vec![g.zero(); 8]).unwrap();
    let m = product_exponential(&g, &path).unwrap();
    assert!(m.prefix().iter().all(|p| p.0.iter().all(|x| *x == 0.0)));
}

#[test]
fn one_cell_is_exp() {
    let g = GroupInstance::unipotent(3).unwrap();
    let grid = TimeGrid::uniform(1.0, 1).unwrap();
    let v = av(&[0.1, -0.2, 0.3]);
    let m = product_exponential(&g, &AdditivePath::from_increments(&grid, vec![v.clone()]).unwrap()).unwrap();
    assert_eq!(m.value(0, 1).unwrap(), g.exp(&v).unwrap());
    assert_eq!(m.prefix()[1], g.exp(&v).unwrap());
}

#[test]
fn two_cell_heisenberg_product() {
    let g = h(1);
    let grid = TimeGrid::uniform(1.0, 2).unwrap();
    let path = AdditivePath::from_increments(&grid, vec![av(&[1.0, 0.0, 0.0]), av(&[0.0, 1.0, 0.0])]).unwrap();
    let m = product_exponential(&g, &path).unwrap();
    assert!(close(&m.value(0, 2).unwrap(), &[1.0, 1.0, 0.5], 1e-15));
}

#[test]
fn two_jump_levy_area() {
    let g = h(1);
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    let x = AdditivePath::from_jumps(&grid, 1, &[(0.3, av(&[1.0]))]).unwrap();
    let y = AdditivePath::from_jumps(&grid, 1, &[(0.7, av(&[1.0]))]).unwrap();
    let z = AdditivePath::from_jumps(&grid, 1, &[]).unwrap();
    assert_eq!(levy_area(&x, &y, 0, 10).unwrap(), 1.0);
    // reversed order flips the sign
    assert_eq!(levy_area(&y, &x, 0, 10).unwrap(), -1.0);
    let m = heisenberg_exact(&g, &x, &y, &z, &grid).unwrap();
    assert!(close(&m.value(0, 10).unwrap(), &[1.0, 1.0, 0.5], 1e-15));
    assert!(close(&heisenberg_value(&g, &x, &y, &z, 0, 10).unwrap(), &[1.0, 1.0, 0.5], 1e-15));
    // a window that holds only one of the jumps has no area
    assert_eq!(levy_area(&x, &y, 0, 5).unwrap(), 0.0);
    assert!(levy_area(&x, &y, 0, 11).is_err());
    assert!(levy_area(&x, &y, 4, 3).is_err());
}

#[test]
fn levy_area_matches_double_sum() {
    let grid = TimeGrid::uniform(1.0, 40).unwrap();
    let model = LevyModel::zero(DriverSpace::Lp { dim: 3, p: 2.0 }).with_isotropic_diffusion(1.0).unwrap();
    let x = sample_additive_trial(&model, &grid, 1, 0);
    let y = sample_additive_trial(&model, &grid, 2, 0);
    for (j, k) in [(0, 40), (3, 17), (10, 11), (25, 25)] {
        let mut brute = 0.0;
        for a in j..k {
            for b in a + 1..k {
                let xa = &x.increments()[a].0;
                let xb = &x.increments()[b].0;
                let ya = &y.increments()[a].0;
                let yb = &y.increments()[b].0;
                for i in 0..3 {
                    brute += xa[i] * yb[i] - xb[i] * ya[i];
                }
            }
        }
        assert!((levy_area(&x, &y, j, k).unwrap() - brute).abs() < 1e-12);
    }
}

#[test]
fn proportional_drivers_have_no_area() {
    let grid = TimeGrid::uniform(1.0, 50).unwrap();
    let model = LevyModel::zero(DriverSpace::Lp { dim: 2, p: 2.0 }).with_isotropic_diffusion(1.0).unwrap();
    let x = sample_additive_trial(&model, &grid, 9, 0);
    let y = AdditivePath::from_increments(&grid, x.increments().iter().map(|v| v.scale(-2.5)).collect()).unwrap();
    assert!(levy_area(&x, &y, 0, 50).unwrap().abs() < 1e-12);
}

#[test]
fn y_zero_leaves_central_driver() {
    let g = h(2);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let models = noisy_models(&g, 1.0, 2.0);
    let [x, _, z] = models.sample(&grid, 4, 0);
    let y = AdditivePath::from_jumps(&grid, 2, &[]).unwrap();
    let m = heisenberg_exact(&g, &x, &y, &z, &grid).unwrap();
    let v = m.value(3, 12).unwrap();
    assert!((v.0[4] - z.increment(3, 12).unwrap().0[0]).abs() < 1e-14);
}

#[test]
fn exact_construction_rejects_mismatch() {
    let g = h(1);
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let other = TimeGrid::uniform(1.0, 5).unwrap();
    let x = AdditivePath::from_jumps(&grid, 1, &[]).unwrap();
    let y = AdditivePath::from_jumps(&other, 1, &[]).unwrap();
    assert!(matches!(heisenberg_exact(&g, &x, &y, &x, &grid), Err(Error::GridMismatch(_))));
    assert!(matches!(heisenberg_exact(&g, &x, &x, &x, &other), Err(Error::GridMismatch(_))));
    let u = GroupInstance::unipotent(3).unwrap();
    assert!(heisenberg_exact(&u, &x, &x, &x, &grid).is_err());
}

#[test]
fn both_constructions_are_cocycles() {
    let g = h(3);
    let grid = TimeGrid::uniform(1.0, 1024).unwrap();
    let models = noisy_models(&g, 1.0, 5.0);
    let [x, y, z] = models.sample(&grid, 17, 0);
    let exact = heisenberg_exact(&g, &x, &y, &z, &grid).unwrap();
    let stacked = stack_heisenberg(&x, &y, &z).unwrap();
    let product = product_exponential(&g, &stacked).unwrap();
    for path in [&exact, &product] {
        let r = verify_multiplicative(path, 1000, 1e-12, 3).unwrap();
        assert!(r.pass, "defect {}", r.max_defect);
    }
    let direct = HeisenbergDrivers { group: g, x: &x, y: &y, z: &z };
    let r = verify_multiplicative(&direct, 300, 1e-12, 5).unwrap();
    assert!(r.pass, "direct defect {}", r.max_defect);
    // the two constructions agree pointwise on a common grid
    for k in [0, 1, 511, 1024] {
        let d = g.chart_distance(&exact.value(0, k).unwrap(), &product.value(0, k).unwrap()).unwrap();
        assert!(d < 1e-12);
    }
    // the half-split product matches direct evaluation
    let lhs = g.mul(&exact.value(0, 512).unwrap(), &exact.value(512, 1024).unwrap()).unwrap();
    let rhs = heisenberg_value(&g, &x, &y, &z, 0, 1024).unwrap();
    assert!(g.chart_distance(&lhs, &rhs).unwrap() < 1e-12);
}

#[test]
fn unipotent_product_is_cocycle() {
    let g = GroupInstance::unipotent(4).unwrap();
    let grid = TimeGrid::uniform(1.0, 256).unwrap();
    let model = LevyModel::zero(DriverSpace::Algebra(g)).with_isotropic_diffusion(0.2).unwrap();
    let path = sample_additive_trial(&model, &grid, 8, 0);
    let m = product_exponential(&g, &path).unwrap();
    assert!(verify_multiplicative(&m, 500, 1e-12, 1).unwrap().pass);
}

#[test]
fn corrupted_cell_is_caught() {
    let g = h(2);
    let grid = TimeGrid::uniform(1.0, 1024).unwrap();
    let [x, y, z] = noisy_models(&g, 1.0, 1.0).sample(&grid, 2, 0);
    let mut m = heisenberg_exact(&g, &x, &y, &z, &grid).unwrap();
    let mut bad = m.cell_increments()[700].clone();
    bad.0[4] += 1e-3;
    m.corrupt_cell(700, bad).unwrap();
    let r = verify_multiplicative(&m, 1000, 1e-12, 3).unwrap();
    assert!(!r.pass);
    assert!((r.max_defect - 1e-3).abs() < 1e-9);
    let (j, k, l) = r.argmax_triple;
    assert!((j == 700 && k == 701) || (k == 700 && l == 701));
    assert!(m.corrupt_cell(5000, g.identity()).is_err());
}

/// Dense 3x3 oracle for Unipotent(3): exp(A) = I + A + A^2 / 2.
fn dense_exp3(v: &[f64]) -> nalgebra::Matrix3<f64> {
    let a = nalgebra::Matrix3::new(0.0, v[0], v[1], 0.0, 0.0, v[2], 0.0, 0.0, 0.0);
    nalgebra::Matrix3::identity() + a + a * a * 0.5
}

#[test]
fn grid_product_matches_dense_matrices_and_bch() {
    let g = GroupInstance::unipotent(3).unwrap();
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let model = LevyModel::zero(DriverSpace::Algebra(g)).with_isotropic_diffusion(0.3).unwrap();
    let path = sample_additive_trial(&model, &grid, 12, 0);
    let m = product_exponential(&g, &path).unwrap();

    let mut dense = nalgebra::Matrix3::identity();
    for v in path.increments() {
        dense *= dense_exp3(&v.0);
    }
    let got = m.value(0, 32).unwrap();
    assert!(close(&got, &[dense[(0, 1)], dense[(0, 2)], dense[(1, 2)]], 1e-12));

    // step 2: exp(sum dX + 1/2 sum_{a<b} [dX_a, dX_b])
    let incs = path.increments();
    let mut total = g.zero();
    for v in incs {
        total.add_assign(v);
    }
    for a in 0..incs.len() {
        for b in a + 1..incs.len() {
            total.add_assign(&g.bracket(&incs[a], &incs[b]).unwrap().scale(0.5));
        }
    }
    assert!(g.chart_distance(&g.exp(&total).unwrap(), &got).unwrap() < 1e-12);
}

#[test]
fn inversion_duality() {
    let g = GroupInstance::unipotent(4).unwrap();
    let grid = TimeGrid::uniform(1.0, 20).unwrap();
    let model = LevyModel::zero(DriverSpace::Algebra(g)).with_isotropic_diffusion(0.3).unwrap();
    let path = sample_additive_trial(&model, &grid, 3, 0);
    let m = product_exponential(&g, &path).unwrap();
    let rev_points: Vec<f64> = grid.points().iter().rev().map(|t| 1.0 - t).collect();
    let rev_grid = TimeGrid::new(rev_points).unwrap();
    let rev_cells: Vec<GroupElement> = m.cell_increments().iter().rev().map(|c| g.inv(c).unwrap()).collect();
    let rev = MultiplicativePath::from_cells(&g, &rev_grid, rev_cells).unwrap();
    for (j, k) in [(0, 20), (3, 9), (7, 8)] {
        let lhs = rev.value(20 - k, 20 - j).unwrap();
        let rhs = g.inv(&m.value(j, k).unwrap()).unwrap();
        assert!(g.chart_distance(&lhs, &rhs).unwrap() < 1e-12);
    }
}

#[test]
fn right_limit_evaluation() {
    let g = h(1);
    let grid = TimeGrid::uniform(1.0, 4).unwrap();
    let path = AdditivePath::from_increments(&grid, (1..=4).map(|i| av(&[i as f64, 0.0, 0.0])).collect()).unwrap();
    let m = product_exponential(&g, &path).unwrap();
    assert_eq!(m.evaluate_right_limit(0.5).unwrap().0[0], 3.0);
    assert_eq!(m.evaluate_right_limit(0.3).unwrap().0[0], 3.0);
    assert_eq!(m.evaluate_right_limit(0.0).unwrap().0[0], 0.0);
    assert_eq!(m.evaluate_right_limit(1e-9).unwrap().0[0], 1.0);
    assert!(m.evaluate_right_limit(1.5).is_err());
    let csv = m.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "t,g0,g1,g2");
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn right_limits_settle_under_refinement() {
    let g = h(1);
    let base = TimeGrid::uniform(1.0, 4).unwrap();
    let models = noisy_models(&g, 1.0, 0.0);
    let t = 0.3;
    let mut medians = Vec::new();
    let mut defects: Vec<Vec<f64>> = vec![Vec::new(); 4];
    for trial in 0..200u64 {
        let mut d = models.sample(&base, 6, trial);
        let mut prev: Option<GroupElement> = None;
        for level in 0..5 {
            if level > 0 {
                for (i, p) in d.iter_mut().enumerate() {
                    *p = p.refine(crate::rng::derive_seed(6, &[i as u64, level, trial]));
                }
            }
            let m = heisenberg_exact(&g, &d[0], &d[1], &d[2], d[0].grid()).unwrap();
            let v = m.evaluate_right_limit(t).unwrap();
            if let Some(p) = prev {
                defects[level as usize - 1].push(g.chart_distance(&p, &v).unwrap());
            }
            prev = Some(v);
        }
    }
    for mut d in defects {
        d.sort_by(f64::total_cmp);
        medians.push(d[d.len() / 2]);
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn drift_only_convergence_is_exact() {
    let g = h(2);
    let models = HeisenbergModels::zero(&g)
        .unwrap()
        .map(|m| {
            let d = m.dim();
            m.with_drift(AlgebraVector(vec![0.7; d]))
        })
        .unwrap();
    let base = TimeGrid::uniform(1.0, 4).unwrap();
    let r = convergence_study(&g, &models, &base, 4, 3, 1).unwrap();
    assert!(r.max_error.iter().all(|e| *e <= 1e-12), "{:?}", r.max_error);
}

#[test]
fn compound_poisson_becomes_exact_once_separated() {
    let g = h(2);
    let models =
        HeisenbergModels::zero(&g).unwrap().map(|m| m.with_jumps(3.0, JumpLaw::UniformOnBall { radius: 1.0 })).unwrap();
    let base = TimeGrid::uniform(1.0, 4).unwrap();
    let r = convergence_study(&g, &models, &base, 6, 40, 2).unwrap();
    assert_eq!(r.exact_after_separation, Some(true));
    assert!(r.separated_trials > 20);
    // coarse grids do mix jumps and show a real error
    assert!(r.rms_error[0] > 1e-3);
    assert!(*r.rms_error.last().unwrap() <= 1e-12);
}

#[test]
fn brownian_convergence_slope() {
    let g = h(2);
    let models = noisy_models(&g, 1.0, 0.0);
    let base = TimeGrid::uniform(1.0, 4).unwrap();
    let r = convergence_study(&g, &models, &base, 6, 200, 3).unwrap();
    let slope = r.slope.unwrap();
    assert!((0.35..=0.65).contains(&slope), "slope {slope}, rms {:?}", r.rms_error);
    assert_eq!(r.exact_after_separation, None);
    assert!(mean(&r.rms_error[..6]) > 0.0);
}
