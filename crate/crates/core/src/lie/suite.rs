//! Randomised kernel checks: group axioms, exp/log round trip, BCH against
//! `log(exp U exp V)` and the Jacobi identity.

use serde::Serialize;

use super::{GroupInstance, GroupKind};
use crate::error::Result;
use crate::rng::{stream, Purpose};

pub const AXIOM_TOL: f64 = 1e-12;
pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const BCH_TOL: f64 = 1e-12;
/// Coordinate scale of the random algebra vectors.
pub const KERNEL_SCALE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub group: GroupKind,
    pub cases: usize,
    pub seed: u64,
    pub associativity: f64,
    pub identity: f64,
    pub inverse: f64,
    /// Relative error `|log exp V - V| / (1 + |V|)` over the log chart.
    pub round_trip: f64,
    pub bch: f64,
    pub jacobi: f64,
    pub pass: bool,
}

/// Runs `cases` random cases per property. Defects are measured as the norm
/// of the log-chart difference.
pub fn kernel_suite(group: &GroupInstance, cases: usize, seed: u64) -> Result<KernelReport> {
    let mut r = KernelReport {
        group: group.kind,
        cases,
        seed,
        associativity: 0.0,
        identity: 0.0,
        inverse: 0.0,
        round_trip: 0.0,
        bch: 0.0,
        jacobi: 0.0,
        pass: false,
    };
    let e = group.identity();
    let ball = group.chart.rho_prime.min(50.0);
    for i in 0..cases as u64 {
        let mut rng = stream(seed, i, 0, Purpose::Sampling);
        let u = group.sample_gaussian(&mut rng, KERNEL_SCALE);
        let v = group.sample_gaussian(&mut rng, KERNEL_SCALE);
        let w = group.sample_gaussian(&mut rng, KERNEL_SCALE);
        let (a, b, c) = (group.exp(&u)?, group.exp(&v)?, group.exp(&w)?);

        let left = group.mul(&group.mul(&a, &b)?, &c)?;
        let right = group.mul(&a, &group.mul(&b, &c)?)?;
        r.associativity = r.associativity.max(group.chart_distance(&left, &right)?);
        r.identity = r
            .identity
            .max(group.chart_distance(&group.mul(&e, &a)?, &a)?)
            .max(group.chart_distance(&group.mul(&a, &e)?, &a)?);
        r.inverse = r
            .inverse
            .max(group.chart_norm(&group.mul(&a, &group.inv(&a)?)?)?)
            .max(group.chart_norm(&group.mul(&group.inv(&a)?, &a)?)?);

        let x = group.sample_in_ball(&mut rng, ball);
        let back = group.log(&group.exp(&x)?)?;
        r.round_trip = r.round_trip.max(group.norm(&back.sub(&x))? / (1.0 + group.norm(&x)?));

        let direct = group.log(&group.mul(&a, &b)?)?;
        r.bch = r.bch.max(group.norm(&direct.sub(&group.bch(&u, &v)?))?);

        let j = group
            .bracket(&u, &group.bracket(&v, &w)?)?
            .add(&group.bracket(&v, &group.bracket(&w, &u)?)?)
            .add(&group.bracket(&w, &group.bracket(&u, &v)?)?);
        r.jacobi = r.jacobi.max(group.norm(&j)?);
    }
    r.pass = r.associativity <= AXIOM_TOL
        && r.identity <= AXIOM_TOL
        && r.inverse <= AXIOM_TOL
        && r.round_trip <= ROUND_TRIP_TOL
        && r.bch <= BCH_TOL
        && r.jacobi <= AXIOM_TOL;
    Ok(r)
}
