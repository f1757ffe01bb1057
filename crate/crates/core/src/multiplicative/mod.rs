//! Multiplicative processes `x^s_t` on a grid: time-ordered products of
//! exponentials of additive increments, and the closed-form Heisenberg
//! construction with a discrete Levy area.

mod convergence;
mod process;

pub use convergence::{convergence_study, ConvergenceReport, HeisenbergModels};
pub use process::{GroupJump, ProcessModel, SampledProcess};

use rand::Rng;
use serde::Serialize;

use crate::additive::AdditivePath;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{AlgebraVector, GroupElement, GroupInstance, GroupKind};
use crate::rng::{stream, Purpose};

/// Two-parameter values on grid indices.
pub trait TwoParameter {
    fn group(&self) -> &GroupInstance;
    /// Number of grid points.
    fn len(&self) -> usize;
    /// `x^{t_j}_{t_k}` for `j <= k`.
    fn value(&self, j: usize, k: usize) -> Result<GroupElement>;
}

/// Grid values stored as prefix products `g_k = x^{t_0}_{t_k}`, so that
/// `x^{t_j}_{t_k} = g_j^{-1} g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativePath {
    group: GroupInstance,
    grid: TimeGrid,
    cell_increments: Vec<GroupElement>,
    prefix: Vec<GroupElement>,
    prefix_inv: Vec<GroupElement>,
}

impl MultiplicativePath {
    /// Builds the path whose cell values are `cells` (ordered products).
    pub fn from_cells(group: &GroupInstance, grid: &TimeGrid, cells: Vec<GroupElement>) -> Result<Self> {
        if cells.len() != grid.cells() {
            return Err(Error::GridMismatch(format!("{} cell values for {} cells", cells.len(), grid.cells())));
        }
        let mut prefix = Vec::with_capacity(cells.len() + 1);
        prefix.push(group.identity());
        for c in &cells {
            let next = group.mul(prefix.last().expect("non-empty"), c)?;
            prefix.push(next);
        }
        Self::from_parts(group, grid, cells, prefix)
    }

    fn from_parts(
        group: &GroupInstance,
        grid: &TimeGrid,
        cells: Vec<GroupElement>,
        prefix: Vec<GroupElement>,
    ) -> Result<Self> {
        let prefix_inv = prefix.iter().map(|g| group.inv(g)).collect::<Result<Vec<_>>>()?;
        Ok(MultiplicativePath { group: *group, grid: grid.clone(), cell_increments: cells, prefix, prefix_inv })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cell_increments(&self) -> &[GroupElement] {
        &self.cell_increments
    }

    /// `g_k = x^{t_0}_{t_k}`.
    pub fn prefix(&self) -> &[GroupElement] {
        &self.prefix
    }

    /// Overwrites one cached cell value without touching the prefixes, as a
    /// stale-cache fault for exercising [`verify_multiplicative`].
    pub fn corrupt_cell(&mut self, cell: usize, value: GroupElement) -> Result<()> {
        let len = self.cell_increments.len();
        let slot = self.cell_increments.get_mut(cell).ok_or(Error::Index { index: cell, len })?;
        *slot = value;
        Ok(())
    }

    /// Path value at the smallest grid point `>= t`.
    pub fn evaluate_right_limit(&self, t: f64) -> Result<GroupElement> {
        let k = self.grid.index_at_or_after(t)?;
        Ok(self.prefix[k].clone())
    }

    /// One row per grid point: `t,g_0..g_{d-1}` of the prefix product.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.group.dim() {
            out.push_str(&format!(",g{i}"));
        }
        out.push('\n');
        for (t, g) in self.grid.points().iter().zip(&self.prefix) {
            out.push_str(&t.to_string());
            for x in &g.0 {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

impl TwoParameter for MultiplicativePath {
    fn group(&self) -> &GroupInstance {
        &self.group
    }

    fn len(&self) -> usize {
        self.prefix.len()
    }

    /// Single-cell spans read the cached cell value; longer spans use prefixes.
    fn value(&self, j: usize, k: usize) -> Result<GroupElement> {
        let n = self.prefix.len();
        if k >= n {
            return Err(Error::Index { index: k, len: n });
        }
        if j > k {
            return Err(Error::InvalidInput(format!("value needs j <= k, got {j} > {k}")));
        }
        if j == k {
            return Ok(self.group.identity());
        }
        if k == j + 1 {
            return Ok(self.cell_increments[j].clone());
        }
        self.group.mul(&self.prefix_inv[j], &self.prefix[k])
    }
}

/// Time-ordered product of `exp(Delta X_k)`.
pub fn product_exponential(group: &GroupInstance, path: &AdditivePath) -> Result<MultiplicativePath> {
    crate::error::check_dim(group.dim(), path.dim())?;
    let cells = path.increments().iter().map(|v| group.exp(v)).collect::<Result<Vec<_>>>()?;
    MultiplicativePath::from_cells(group, path.grid(), cells)
}

fn heisenberg_shape(group: &GroupInstance) -> Result<usize> {
    match group.kind {
        GroupKind::Heisenberg { n, .. } => Ok(n),
        _ => Err(Error::Unsupported("closed-form construction needs a Heisenberg group".into())),
    }
}

fn check_drivers(group: &GroupInstance, x: &AdditivePath, y: &AdditivePath, z: &AdditivePath) -> Result<usize> {
    let n = heisenberg_shape(group)?;
    if x.grid() != y.grid() || x.grid() != z.grid() {
        return Err(Error::GridMismatch("X, Y and Z drivers must share one grid".into()));
    }
    crate::error::check_dim(n, x.dim())?;
    crate::error::check_dim(n, y.dim())?;
    crate::error::check_dim(1, z.dim())?;
    Ok(n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete Levy area `sum_{j<a<b<=k} <dX_a|dY_b> - <dX_b|dY_a>` via running
/// sums, in `O(k - j)`.
pub fn levy_area(x: &AdditivePath, y: &AdditivePath, j: usize, k: usize) -> Result<f64> {
    if x.grid() != y.grid() {
        return Err(Error::GridMismatch("X and Y drivers must share one grid".into()));
    }
    crate::error::check_dim(x.dim(), y.dim())?;
    let n = x.grid().cells();
    if k > n {
        return Err(Error::Index { index: k, len: n + 1 });
    }
    if j > k {
        return Err(Error::InvalidInput(format!("levy_area needs j <= k, got {j} > {k}")));
    }
    let (dx, dy) = (x.increments(), y.increments());
    let mut sx = vec![0.0; x.dim()];
    let mut sy = vec![0.0; x.dim()];
    let mut area = 0.0;
    for c in j..k {
        let (a, b) = (&dx[c].0, &dy[c].0);
        area += dot(&sx, b) - dot(a, &sy);
        for i in 0..sx.len() {
            sx[i] += a[i];
            sy[i] += b[i];
        }
    }
    Ok(area)
}

/// `x^{t_j}_{t_k}` of the closed form, evaluated directly from the drivers.
pub fn heisenberg_value(
    group: &GroupInstance,
    x: &AdditivePath,
    y: &AdditivePath,
    z: &AdditivePath,
    j: usize,
    k: usize,
) -> Result<GroupElement> {
    check_drivers(group, x, y, z)?;
    let area = levy_area(x, y, j, k)?;
    let mut out = x.increment(j, k)?.0;
    out.extend(y.increment(j, k)?.0);
    out.push(z.increment(j, k)?.0[0] + 0.5 * area);
    Ok(GroupElement(out))
}

/// Closed-form Heisenberg process
/// `x^s_t = (X_t - X_s, Y_t - Y_s, Z_t - Z_s + area / 2)`.
pub fn heisenberg_exact(
    group: &GroupInstance,
    x: &AdditivePath,
    y: &AdditivePath,
    z: &AdditivePath,
    grid: &TimeGrid,
) -> Result<MultiplicativePath> {
    let n = check_drivers(group, x, y, z)?;
    if x.grid() != grid {
        return Err(Error::GridMismatch("drivers are not on the requested grid".into()));
    }
    let cells_n = grid.cells();
    let mut prefix = Vec::with_capacity(cells_n + 1);
    let mut cells = Vec::with_capacity(cells_n);
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    let mut sz = 0.0;
    let mut area = 0.0;
    let pack = |sx: &[f64], sy: &[f64], z: f64| {
        let mut v = Vec::with_capacity(2 * n + 1);
        v.extend_from_slice(sx);
        v.extend_from_slice(sy);
        v.push(z);
        GroupElement(v)
    };
    prefix.push(pack(&sx, &sy, 0.0));
    for c in 0..cells_n {
        let (a, b, dz) = (&x.increments()[c].0, &y.increments()[c].0, z.increments()[c].0[0]);
        area += dot(&sx, b) - dot(a, &sy);
        for i in 0..n {
            sx[i] += a[i];
            sy[i] += b[i];
        }
        sz += dz;
        prefix.push(pack(&sx, &sy, sz + 0.5 * area));
        cells.push(pack(a, b, dz));
    }
    MultiplicativePath::from_parts(group, grid, cells, prefix)
}

/// Algebra-valued increments `(dX, dY, dZ)` of a Heisenberg driver triple.
pub fn stack_heisenberg(x: &AdditivePath, y: &AdditivePath, z: &AdditivePath) -> Result<AdditivePath> {
    if x.grid() != y.grid() || x.grid() != z.grid() {
        return Err(Error::GridMismatch("X, Y and Z drivers must share one grid".into()));
    }
    let incs = x
        .increments()
        .iter()
        .zip(y.increments())
        .zip(z.increments())
        .map(|((a, b), c)| {
            let mut v = a.0.clone();
            v.extend_from_slice(&b.0);
            v.extend_from_slice(&c.0);
            AlgebraVector(v)
        })
        .collect();
    AdditivePath::from_increments(x.grid(), incs)
}

/// Closed-form Heisenberg values evaluated pair by pair from the drivers,
/// with no shared cache between spans.
pub struct HeisenbergDrivers<'a> {
    pub group: GroupInstance,
    pub x: &'a AdditivePath,
    pub y: &'a AdditivePath,
    pub z: &'a AdditivePath,
}

impl TwoParameter for HeisenbergDrivers<'_> {
    fn group(&self) -> &GroupInstance {
        &self.group
    }

    fn len(&self) -> usize {
        self.x.grid().points().len()
    }

    fn value(&self, j: usize, k: usize) -> Result<GroupElement> {
        heisenberg_value(&self.group, self.x, self.y, self.z, j, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocycleReport {
    pub max_defect: f64,
    pub argmax_triple: (usize, usize, usize),
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Checks `x^{t_j}_{t_k} x^{t_k}_{t_l} = x^{t_j}_{t_l}` on `samples` random
/// triples plus a sweep of all adjacent triples `(j, j+1, j+2)`. The defect
/// is the chart distance between the two sides.
pub fn verify_multiplicative<P: TwoParameter + ?Sized>(
    path: &P,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CocycleReport> {
    let group = path.group();
    let last = path.len() - 1;
    let mut triples: Vec<(usize, usize, usize)> = Vec::with_capacity(samples + last);
    let mut rng = stream(seed, 0, 0, Purpose::Sampling);
    for _ in 0..samples {
        let mut t = [rng.random_range(0..=last), rng.random_range(0..=last), rng.random_range(0..=last)];
        t.sort_unstable();
        triples.push((t[0], t[1], t[2]));
    }
    for j in 0..last.saturating_sub(1) {
        triples.push((j, j + 1, j + 2));
    }
    let mut worst = (0.0f64, (0, 0, 0));
    for &(j, k, l) in &triples {
        let lhs = group.mul(&path.value(j, k)?, &path.value(k, l)?)?;
        let rhs = path.value(j, l)?;
        let d = group.chart_distance(&lhs, &rhs)?;
        if d > worst.0 || d.is_nan() {
            worst = (d, (j, k, l));
        }
    }
    Ok(CocycleReport { max_defect: worst.0, argmax_triple: worst.1, samples: triples.len(), tol, pass: worst.0 <= tol })
}

#[cfg(test)]
mod tests;
