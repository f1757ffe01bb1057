//! Concrete nilpotent Banach-Lie groups and their Lie algebras.
//!
//! Two instances are provided:
//!
//! * [`GroupKind::Heisenberg`]: the Heisenberg group on `l^p x l^q x R`,
//!   truncated to `N` coordinates per block with the exact `p`- and
//!   `q`-norms. The algebra norm is `|x|_p + |y|_q + |z|`.
//! * [`GroupKind::Unipotent`]: unipotent upper-triangular `n x n` matrices
//!   (`n` in `{3, 4}`) with the spectral norm on the algebra.
//!
//! Both have globally defined `exp`/`log` given by finite formulas, so the
//! Baker-Campbell-Hausdorff series terminates and [`GroupInstance::bch`] is
//! exact.

mod ball;
pub(crate) mod heisenberg;
mod suite;
mod unipotent;

pub use ball::{certify_ball_power, certify_bracket_bound, BallRadius};
pub use suite::{kernel_suite, KernelReport};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Coordinates of an element of the Lie algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraVector(pub Vec<f64>);

/// Coordinates of a group element (see the module docs for the layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<f64>);

impl AlgebraVector {
    pub fn zeros(dim: usize) -> Self {
        AlgebraVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }

    pub fn add(&self, other: &AlgebraVector) -> AlgebraVector {
        AlgebraVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &AlgebraVector) -> AlgebraVector {
        AlgebraVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> AlgebraVector {
        AlgebraVector(self.0.iter().map(|a| a * s).collect())
    }

    pub fn add_assign(&mut self, other: &AlgebraVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

impl GroupElement {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroupKind {
    Heisenberg { n: usize, p: f64 },
    Unipotent { n: usize },
}

/// Radii of the logarithm chart and the bracket constant of the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    /// Radius of the ball on which `log` inverts `exp`.
    pub rho_prime: f64,
    /// Radius of the ball pairs on which the BCH map stays in the chart.
    pub rho_double_prime: f64,
    /// `C` with `|[U, V]| <= C |U| |V|`.
    pub bracket_bound: f64,
}

impl ChartSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_prime > 0.0) {
            return Err(Error::Parameter("rho_prime must be positive".into()));
        }
        if !(self.rho_double_prime > 0.0 && self.rho_double_prime < self.rho_prime) {
            return Err(Error::Parameter("rho_double_prime must lie in (0, rho_prime)".into()));
        }
        if !(self.bracket_bound >= 0.0 && self.bracket_bound.is_finite()) {
            return Err(Error::Parameter("bracket_bound must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// A group together with its chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupInstance {
    pub kind: GroupKind,
    pub chart: ChartSpec,
}

/// exp is a global diffeomorphism on the Heisenberg group; the chart radius
/// is capped only to keep arithmetic finite.
pub const HEISENBERG_RHO_PRIME: f64 = 1e6;
pub const UNIPOTENT_RHO_PRIME: f64 = 0.5;

impl GroupInstance {
    pub fn heisenberg(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("Heisenberg N must be positive".into()));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("Heisenberg p must lie in (1, inf), got {p}")));
        }
        Ok(GroupInstance {
            kind: GroupKind::Heisenberg { n, p },
            chart: ChartSpec {
                rho_prime: HEISENBERG_RHO_PRIME,
                rho_double_prime: HEISENBERG_RHO_PRIME / 4.0,
                bracket_bound: 2.0,
            },
        })
    }

    pub fn unipotent(n: usize) -> Result<Self> {
        if !(n == 3 || n == 4) {
            return Err(Error::InvalidInput(format!("unipotent size must be 3 or 4, got {n}")));
        }
        Ok(GroupInstance {
            kind: GroupKind::Unipotent { n },
            chart: ChartSpec {
                rho_prime: UNIPOTENT_RHO_PRIME,
                rho_double_prime: UNIPOTENT_RHO_PRIME / 4.0,
                bracket_bound: 2.0,
            },
        })
    }

    pub fn with_chart(mut self, chart: ChartSpec) -> Result<Self> {
        chart.validate()?;
        self.chart = chart;
        Ok(self)
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self.kind, GroupKind::Heisenberg { .. })
    }

    /// Number of coordinates of algebra vectors and group elements.
    pub fn dim(&self) -> usize {
        match self.kind {
            GroupKind::Heisenberg { n, .. } => 2 * n + 1,
            GroupKind::Unipotent { n } => unipotent::coord_len(n),
        }
    }

    /// Length `s` of the lower central series: all `s+1`-fold brackets vanish.
    pub fn nilpotency_step(&self) -> usize {
        match self.kind {
            GroupKind::Heisenberg { .. } => 2,
            GroupKind::Unipotent { n } => n - 1,
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0.0; self.dim()])
    }

    pub fn zero(&self) -> AlgebraVector {
        AlgebraVector::zeros(self.dim())
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        check_dim(self.dim(), v.len())
    }

    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(&g.0)?;
        self.check(&h.0)?;
        Ok(GroupElement(match self.kind {
            GroupKind::Heisenberg { n, .. } => heisenberg::mul(&g.0, &h.0, n),
            GroupKind::Unipotent { n } => unipotent::mul(&g.0, &h.0, n),
        }))
    }

    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(&g.0)?;
        Ok(GroupElement(match self.kind {
            GroupKind::Heisenberg { .. } => g.0.iter().map(|x| -x).collect(),
            GroupKind::Unipotent { n } => unipotent::inv(&g.0, n),
        }))
    }

    /// `inv(g) * h`.
    pub fn between(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.mul(&self.inv(g)?, h)
    }

    pub fn exp(&self, v: &AlgebraVector) -> Result<GroupElement> {
        self.check(&v.0)?;
        Ok(GroupElement(match self.kind {
            GroupKind::Heisenberg { .. } => v.0.clone(),
            GroupKind::Unipotent { n } => unipotent::exp(&v.0, n),
        }))
    }

    /// Inverse of [`exp`](Self::exp). Both built-in instances have a global
    /// logarithm, so the chart-domain error is never produced by them.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector> {
        self.check(&g.0)?;
        let out = match self.kind {
            GroupKind::Heisenberg { .. } => g.0.clone(),
            GroupKind::Unipotent { n } => unipotent::log(&g.0, n),
        };
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::ChartDomain("non-finite logarithm".into()));
        }
        Ok(AlgebraVector(out))
    }

    pub fn bracket(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        self.check(&u.0)?;
        self.check(&v.0)?;
        Ok(AlgebraVector(match self.kind {
            GroupKind::Heisenberg { n, .. } => heisenberg::bracket(&u.0, &v.0, n),
            GroupKind::Unipotent { n } => unipotent::bracket(&u.0, &v.0, n),
        }))
    }

    /// Terminating Baker-Campbell-Hausdorff series `log(exp U exp V)`.
    pub fn bch(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        let step = self.nilpotency_step();
        let mut out = u.add(v);
        if step == 1 {
            return Ok(out);
        }
        let uv = self.bracket(u, v)?;
        out.add_assign(&uv.scale(0.5));
        if step == 2 {
            return Ok(out);
        }
        if step == 3 {
            let uuv = self.bracket(u, &uv)?;
            let vuv = self.bracket(v, &uv)?;
            out.add_assign(&uuv.sub(&vuv).scale(1.0 / 12.0));
            return Ok(out);
        }
        Err(Error::UnsupportedStep(step))
    }

    pub fn norm(&self, v: &AlgebraVector) -> Result<f64> {
        self.check(&v.0)?;
        Ok(self.norm_raw(&v.0))
    }

    pub(crate) fn norm_raw(&self, v: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Heisenberg { n, p } => heisenberg::norm(v, n, p),
            GroupKind::Unipotent { n } => unipotent::norm(v, n),
        }
    }

    /// `|log g|`.
    pub fn chart_norm(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.norm_raw(&self.log(g)?.0))
    }

    /// Norm of the difference of logarithms; the round-off yardstick used
    /// when comparing two evaluations of the same element.
    pub fn chart_distance(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        let (a, b) = (self.log(g)?, self.log(h)?);
        Ok(self.norm_raw(&a.sub(&b).0))
    }

    /// Membership in `U_delta = exp(B_delta)`, strict inequality.
    pub fn in_ball(&self, g: &GroupElement, delta: f64) -> Result<bool> {
        self.check_radius(delta)?;
        Ok(match self.log(g) {
            Ok(v) => self.norm_raw(&v.0) < delta,
            Err(Error::ChartDomain(_)) => false,
            Err(e) => return Err(e),
        })
    }

    pub(crate) fn check_radius(&self, delta: f64) -> Result<()> {
        if !(delta > 0.0) || delta >= self.chart.rho_prime {
            return Err(Error::Parameter(format!("radius {delta} must lie in (0, rho' = {})", self.chart.rho_prime)));
        }
        Ok(())
    }

    /// Draws a vector whose direction is a normalised Gaussian and whose norm
    /// is `radius * U^(1/dim)`; the result lies strictly inside `B_radius`.
    pub fn sample_in_ball<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> AlgebraVector {
        sample_in_ball_with(rng, self.dim(), radius, |v| self.norm_raw(v))
    }

    /// Gaussian coordinates with standard deviation `scale`.
    pub fn sample_gaussian<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> AlgebraVector {
        AlgebraVector((0..self.dim()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
    }
}

pub(crate) fn sample_in_ball_with<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    radius: f64,
    norm: impl Fn(&[f64]) -> f64,
) -> AlgebraVector {
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&dir);
        if n == 0.0 || !n.is_finite() {
            continue;
        }
        let u: f64 = rng.random::<f64>();
        let r = radius * u.powf(1.0 / dim as f64);
        if r >= radius {
            continue;
        }
        return AlgebraVector(dir.into_iter().map(|x| x * r / n).collect());
    }
}
