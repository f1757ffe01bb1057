use super::lemmas::largest_step_events;
use super::*;
use crate::additive::{AdditivePath, DriverSpace, JumpLaw, LevyModel};
use crate::lie::{AlgebraVector, GroupInstance};
use crate::multiplicative::product_exponential;
use crate::verdict::Verdict;

fn h() -> GroupInstance {
    GroupInstance::heisenberg(2, 2.0).unwrap()
}

fn brownian(group: GroupInstance, sigma: f64) -> ProcessModel {
    let driver = LevyModel::zero(DriverSpace::Algebra(group)).with_isotropic_diffusion(sigma).unwrap();
    ProcessModel::product(group, driver).unwrap()
}

fn zero_model(group: GroupInstance) -> ProcessModel {
    ProcessModel::product(group, LevyModel::zero(DriverSpace::Algebra(group))).unwrap()
}

/// Exhaustive search over all increasing index subsets.
fn brute_force<P: TwoParameter>(path: &P, indices: &[usize], delta: f64) -> usize {
    let g = path.group();
    let n = indices.len();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| indices[i]).collect();
        let ok = chosen.windows(2).all(|w| !g.in_ball(&path.value(w[0], w[1]).unwrap(), delta).unwrap());
        if ok {
            best = best.max(chosen.len() - 1);
        }
    }
    best
}

#[test]
fn chain_dp_on_explicit_relation() {
    // outside iff indices differ by at least 2: best chain 0,2,4,6 has 3 steps
    assert_eq!(longest_chain(7, |i, j| j - i >= 2), 3);
    assert_eq!(longest_chain(5, |_, _| false), 0);
    assert_eq!(longest_chain(5, |_, _| true), 4);
    assert_eq!(longest_chain(0, |_, _| true), 0);
}

#[test]
fn constant_and_single_jump_paths() {
    let g = h();
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    let flat = product_exponential(&g, &AdditivePath::from_jumps(&grid, 5, &[]).unwrap()).unwrap();
    let q = OscillationQuery { delta: 0.5, window: (0, 10) };
    assert_eq!(count_oscillations(&flat, &q).unwrap(), 0);
    let jump = AlgebraVector(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    let one = product_exponential(&g, &AdditivePath::from_jumps(&grid, 5, &[(0.45, jump)]).unwrap()).unwrap();
    assert_eq!(count_oscillations(&one, &q).unwrap(), 1);
    assert_eq!(count_oscillations(&one, &OscillationQuery { delta: 0.5, window: (5, 10) }).unwrap(), 0);
    assert!(count_oscillations(&one, &OscillationQuery { delta: 0.5, window: (0, 11) }).is_err());
    assert!(count_oscillations(&one, &OscillationQuery { delta: 0.5, window: (6, 5) }).is_err());
    assert!(count_oscillations(&one, &OscillationQuery { delta: 2e6, window: (0, 10) }).is_err());
}

#[test]
fn back_and_forth_jumps_count_each_swing() {
    let g = h();
    let grid = TimeGrid::uniform(1.0, 10).unwrap();
    let up = AlgebraVector(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    let down = up.scale(-1.0);
    let jumps = [(0.15, up.clone()), (0.35, down.clone()), (0.55, up), (0.75, down)];
    let m = product_exponential(&g, &AdditivePath::from_jumps(&grid, 5, &jumps).unwrap()).unwrap();
    assert_eq!(count_oscillations(&m, &OscillationQuery { delta: 0.5, window: (0, 10) }).unwrap(), 4);
    assert_eq!(count_oscillations_on(&m, &[0, 3, 6, 9], 0.5).unwrap(), 2);
}

#[test]
fn dp_matches_brute_force() {
    let g = h();
    let model = brownian(g, 1.0);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let mut nontrivial = 0;
    for t in 0..150u64 {
        let path = model.sample(&grid, 77, t).unwrap();
        let start = (t as usize * 5) % 6;
        let len = 2 + (t as usize % 11);
        let indices: Vec<usize> = (start..start + len).collect();
        let delta = 0.2 + 0.1 * (t % 8) as f64;
        let dp = count_oscillations_on(&path, &indices, delta).unwrap();
        assert_eq!(dp, brute_force(&path, &indices, delta), "trial {t}");
        nontrivial += (dp > 1) as usize;
    }
    assert!(nontrivial > 20);
}

#[test]
fn pair_norm_layout() {
    let g = h();
    let path = brownian(g, 1.0).sample(&TimeGrid::uniform(1.0, 6).unwrap(), 1, 0).unwrap();
    let idx = [0, 2, 3, 6];
    let p = PairNorms::compute(&path, &idx).unwrap();
    for a in 0..4 {
        for b in a + 1..4 {
            let direct = g.chart_norm(&path.value(idx[a], idx[b]).unwrap()).unwrap();
            assert_eq!(p.norm(a, b), direct);
        }
    }
}

#[test]
fn axioms_hold() {
    let model = brownian(h(), 1.0);
    let grid = TimeGrid::uniform(1.0, 20).unwrap();
    let r = oscillation_axioms_test(&model, &grid, 0.4, 200, 5).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn counts_monotone_under_refinement() {
    let model = brownian(h(), 1.0);
    let fine = TimeGrid::uniform(1.0, 32).unwrap();
    for t in 0..30 {
        let path = model.sample(&fine, 3, t).unwrap();
        let mut prev = 0;
        for step in [8, 4, 2, 1] {
            let idx: Vec<usize> = (0..=32).step_by(step).collect();
            let c = count_oscillations_on(&path, &idx, 0.3).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }
}

#[test]
fn zero_driver_lemmas_are_trivial() {
    let model = zero_model(h());
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let a = mc_maximum_oscillation(&model, &grid, 0.5, 50, 1).unwrap();
    assert_eq!((a.lhs, a.rhs, a.verdict), (0.0, 0.0, Verdict::Pass));
    let b = mc_largest_step(&model, &grid, 0.5, 50, 1).unwrap();
    assert_eq!((b.lhs, b.rhs, b.verdict), (0.0, 0.0, Verdict::Pass));
    let c = mc_expectation_bound(&model, &grid, 0.5, 50, 1).unwrap();
    assert_eq!((c.mean_count, c.bound, c.verdict), (0.0, Some(0.0), Verdict::Pass));
}

#[test]
fn brownian_lemmas_pass() {
    let model = brownian(h(), 0.6);
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let a = mc_maximum_oscillation(&model, &grid, 0.5, 2000, 2).unwrap();
    assert_eq!(a.verdict, Verdict::Pass, "{a:?}");
    assert!(a.estimates["alpha_hat"] > 0.05 && a.estimates["alpha_hat"] < 1.0);
    let b = mc_largest_step(&model, &grid, 0.5, 2000, 3).unwrap();
    assert_eq!(b.verdict, Verdict::Pass, "{b:?}");
    assert!(b.rhs > 0.1);
}

#[test]
fn small_jumps_keep_alpha_small() {
    let g = h();
    let driver =
        LevyModel::zero(DriverSpace::Algebra(g)).with_jumps(0.5, JumpLaw::UniformOnBall { radius: 0.125 }).unwrap();
    let model = ProcessModel::product(g, driver).unwrap();
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let r = mc_maximum_oscillation(&model, &grid, 0.5, 2000, 4).unwrap();
    // reaching norm 0.5 needs at least four jumps: P(Poisson(0.5) >= 4) < 2e-3
    assert!(r.estimates["alpha_hat"] < 0.01);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn planted_jump_forces_both_sides() {
    let g = h();
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let delta = 0.5;
    let r_w = g.ball_power_radius(delta, 2).unwrap().radius().unwrap();
    let jump = AlgebraVector(vec![0.0, 0.0, 0.0, 0.0, 2.0 * r_w]);
    let path = product_exponential(&g, &AdditivePath::from_jumps(&grid, 5, &[(0.52, jump)]).unwrap()).unwrap();
    let all: Vec<usize> = (0..=16).collect();
    let p = PairNorms::compute(&path, &all).unwrap();
    let (pair, rhs) = largest_step_events(&p, delta, r_w);
    assert_eq!(pair, Some((0, 9)));
    assert!(rhs);
}

#[test]
fn expectation_bound_with_moderate_alpha() {
    let model = brownian(h(), 0.11);
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let r = mc_expectation_bound(&model, &grid, 0.5, 4000, 6).unwrap();
    assert!(r.alpha_hat > 0.15 && r.alpha_hat < 0.5, "alpha {}", r.alpha_hat);
    let b = r.bound.unwrap();
    assert!((b - r.alpha_hat / (1.0 - r.alpha_hat)).abs() < 1e-15);
    assert!(r.mean_count <= b);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert_eq!(r.tail.len(), 3);
}

#[test]
fn expectation_bound_inconclusive_when_alpha_near_one() {
    let model = brownian(h(), 5.0);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let r = mc_expectation_bound(&model, &grid, 0.5, 200, 6).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.bound.is_none());
}

#[test]
fn continuity_zero_driver_uses_whole_horizon() {
    let r = uniform_continuity_probe(&zero_model(h()), 2.0, 16, 0.5, 0.1, 20, 1).unwrap();
    assert_eq!(r.window, 2.0);
    assert!(!r.finest_exceeds && r.monotone);
}

#[test]
fn continuity_window_revalidates_on_fresh_seed() {
    let model = brownian(h(), 1.0);
    let r = uniform_continuity_probe(&model, 1.0, 64, 1.0, 0.1, 1000, 11).unwrap();
    assert!(r.monotone && !r.finest_exceeds);
    assert!(r.window < 1.0);
    let fresh = uniform_continuity_probe(&model, 1.0, 64, 1.0, 0.1, 1000, 12).unwrap();
    let p = fresh.probes.iter().find(|p| p.window == r.window).unwrap().probability;
    assert!(p <= 0.1 + 3.0 * (0.1f64 * 0.9 / 1000.0).sqrt(), "fresh probability {p}");
}

#[test]
fn continuity_window_shrinks_with_intensity() {
    let g = h();
    let mk = |lambda: f64| {
        let d = LevyModel::zero(DriverSpace::Algebra(g))
            .with_isotropic_diffusion(0.3)
            .unwrap()
            .with_jumps(lambda, JumpLaw::UniformOnBall { radius: 2.0 })
            .unwrap();
        ProcessModel::product(g, d).unwrap()
    };
    let mut decreases = 0;
    for seed in 0..5 {
        let a = uniform_continuity_probe(&mk(1.0), 1.0, 32, 1.0, 0.2, 300, seed).unwrap().window;
        let b = uniform_continuity_probe(&mk(2.0), 1.0, 32, 1.0, 0.2, 300, seed).unwrap().window;
        assert!(b <= a, "seed {seed}: {b} > {a}");
        decreases += (b < a) as usize;
    }
    assert!(decreases >= 1);
}

#[test]
fn continuity_rejects_bad_alpha() {
    assert!(uniform_continuity_probe(&zero_model(h()), 1.0, 16, 0.5, 1.0, 10, 1).is_err());
    assert!(uniform_continuity_probe(&zero_model(h()), 1.0, 12, 0.5, 0.5, 10, 1).is_err());
}

#[test]
fn exhaustive_check_agrees_with_dp() {
    let m = brownian(h(), 0.4);
    let r = dp_exhaustive_check(&m, 1.0, 0.3, 12, 100, 8).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.windows > 100);
    assert!(dp_exhaustive_check(&m, 1.0, 0.3, 17, 1, 8).is_err());
}
