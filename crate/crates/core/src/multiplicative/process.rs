//! Multiplicative process models: a driver plus the construction that turns
//! it into grid values.

use serde::{Deserialize, Serialize};

use super::{heisenberg_exact, product_exponential, HeisenbergModels, MultiplicativePath};
use crate::additive::{sample_additive_trial, DriverSpace, LevyModel};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lie::{AlgebraVector, GroupInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessModel {
    /// Time-ordered exponentials of one algebra-valued driver.
    Product { group: GroupInstance, driver: LevyModel },
    /// Closed-form Heisenberg process from separate block drivers.
    Heisenberg { group: GroupInstance, drivers: HeisenbergModels },
}

/// A jump of the driver, as an algebra vector (the log of the group jump).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupJump {
    pub time: f64,
    pub cell: usize,
    pub log: AlgebraVector,
}

pub struct SampledProcess {
    pub path: MultiplicativePath,
    /// Ground-truth jumps in time order.
    pub jumps: Vec<GroupJump>,
}

impl ProcessModel {
    pub fn product(group: GroupInstance, driver: LevyModel) -> Result<Self> {
        match driver.space {
            DriverSpace::Algebra(g) if g == group => {}
            _ => return Err(Error::InvalidInput("product driver must live on the algebra of the group".into())),
        }
        driver.validate()?;
        Ok(ProcessModel::Product { group, driver })
    }

    pub fn group(&self) -> &GroupInstance {
        match self {
            ProcessModel::Product { group, .. } | ProcessModel::Heisenberg { group, .. } => group,
        }
    }

    pub fn drivers(&self) -> Vec<&LevyModel> {
        match self {
            ProcessModel::Product { driver, .. } => vec![driver],
            ProcessModel::Heisenberg { drivers, .. } => vec![&drivers.x, &drivers.y, &drivers.z],
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.drivers().iter().all(|m| m.is_stationary())
    }

    pub fn sample(&self, grid: &TimeGrid, seed: u64, trial: u64) -> Result<MultiplicativePath> {
        Ok(self.sample_with_jumps(grid, seed, trial)?.path)
    }

    pub fn sample_with_jumps(&self, grid: &TimeGrid, seed: u64, trial: u64) -> Result<SampledProcess> {
        match self {
            ProcessModel::Product { group, driver } => {
                let d = sample_additive_trial(driver, grid, seed, trial);
                let jumps = d
                    .true_jumps()
                    .iter()
                    .map(|j| GroupJump { time: j.time, cell: j.cell, log: j.value.clone() })
                    .collect();
                Ok(SampledProcess { path: product_exponential(group, &d)?, jumps })
            }
            ProcessModel::Heisenberg { group, drivers } => {
                let [x, y, z] = drivers.sample(grid, seed, trial);
                let (nx, ny) = (x.dim(), y.dim());
                let mut jumps: Vec<GroupJump> = Vec::new();
                for (block, p) in [&x, &y, &z].iter().enumerate() {
                    for j in p.true_jumps() {
                        let mut v = vec![0.0; nx + ny + 1];
                        let off = [0, nx, nx + ny][block];
                        v[off..off + j.value.dim()].copy_from_slice(&j.value.0);
                        jumps.push(GroupJump { time: j.time, cell: j.cell, log: AlgebraVector(v) });
                    }
                }
                jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
                Ok(SampledProcess { path: heisenberg_exact(group, &x, &y, &z, grid)?, jumps })
            }
        }
    }
}
