use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time points `0 = t_0 < t_1 < ... < t_n = T`.
///
/// Cell `c` (zero-based) is the half-open interval `(t_c, t_{c+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidInput("grid must start at t = 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("grid points must be finite".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!("grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(TimeGrid { points })
    }

    pub fn uniform(t_end: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(t_end > 0.0) {
            return Err(Error::InvalidInput("uniform grid needs T > 0 and cells > 0".into()));
        }
        let mut points: Vec<f64> = (0..=cells).map(|k| t_end * k as f64 / cells as f64).collect();
        points[cells] = t_end;
        TimeGrid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn end(&self) -> f64 {
        self.points[self.cells()]
    }

    /// Largest spacing.
    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Bisects every cell.
    pub fn refine(&self) -> TimeGrid {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            points.push(w[0]);
            points.push(0.5 * (w[0] + w[1]));
        }
        points.push(self.end());
        TimeGrid { points }
    }

    /// Zero-based cell whose interval `(t_c, t_{c+1}]` contains `t`; `t = 0`
    /// is assigned to the first cell.
    pub fn cell_of(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.end()).contains(&t) {
            return None;
        }
        let k = self.points.partition_point(|&p| p < t);
        Some(k.saturating_sub(1).min(self.cells() - 1))
    }

    /// Index of the smallest grid point `>= t`.
    pub fn index_at_or_after(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.end()).contains(&t) {
            return Err(Error::Parameter(format!("time {t} outside [0, {}]", self.end())));
        }
        Ok(self.points.partition_point(|&p| p < t))
    }
}
