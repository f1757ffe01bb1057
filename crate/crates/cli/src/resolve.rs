//! Turns the named blocks of a [`Config`] into core objects and checks that
//! every experiment refers to blocks that exist and fit together.

use std::collections::{BTreeMap, BTreeSet};

use lieproc_core::additive::{DriverSpace, JumpLaw, LevyModel, TimeScaling};
use lieproc_core::grid::TimeGrid;
use lieproc_core::lie::{AlgebraVector, ChartSpec, GroupInstance};
use lieproc_core::multiplicative::{HeisenbergModels, ProcessModel};

use crate::config::*;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Context {
    pub groups: BTreeMap<String, GroupInstance>,
    pub models: BTreeMap<String, ProcessModel>,
    pub grids: BTreeMap<String, TimeGrid>,
}

fn build_group(g: &GroupConfig) -> lieproc_core::Result<GroupInstance> {
    let (group, chart) = match g {
        GroupConfig::Heisenberg { n, p, chart } => (GroupInstance::heisenberg(*n, *p)?, chart),
        GroupConfig::Unipotent { n, chart } => (GroupInstance::unipotent(*n)?, chart),
    };
    match chart {
        Some(c) => group.with_chart(ChartSpec {
            rho_prime: c.rho_prime,
            rho_double_prime: c.rho_double_prime,
            bracket_bound: c.bracket_bound,
        }),
        None => Ok(group),
    }
}

fn build_driver(space: DriverSpace, d: &DriverConfig) -> lieproc_core::Result<LevyModel> {
    let mut m = LevyModel::zero(space);
    if let Some(v) = &d.drift {
        m = m.with_drift(AlgebraVector(v.clone()))?;
    }
    match &d.diffusion {
        Some(Diffusion::Isotropic(s)) => m = m.with_isotropic_diffusion(*s)?,
        Some(Diffusion::PerCoordinate(v)) => m = m.with_diffusion(v.clone())?,
        None => {}
    }
    if let Some(j) = &d.jumps {
        let law = match &j.law {
            JumpLawConfig::UniformOnBall { radius } => JumpLaw::UniformOnBall { radius: *radius },
            JumpLawConfig::Atom { value } => JumpLaw::FixedAtom(AlgebraVector(value.clone())),
            JumpLawConfig::Discrete { atoms } => {
                JumpLaw::Discrete(atoms.iter().map(|a| (AlgebraVector(a.value.clone()), a.p)).collect())
            }
        };
        m = m.with_jumps(j.intensity, law)?;
    }
    if let Some(ts) = &d.time_scaling {
        m = m.with_time_scaling(TimeScaling::new(ts.breaks.clone(), ts.rates.clone())?)?;
    }
    m.validate()?;
    Ok(m)
}

fn build_grid(g: &GridConfig) -> Result<TimeGrid, String> {
    let grid = match (g.t_end, g.cells, &g.points) {
        (Some(t), Some(n), None) => TimeGrid::uniform(t, n),
        (None, None, Some(p)) => TimeGrid::new(p.clone()),
        _ => return Err("give either `t_end` and `cells`, or `points`".into()),
    };
    grid.map_err(|e| e.to_string())
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Context {
    pub fn build(config: &Config) -> Result<Self, CliError> {
        let mut groups = BTreeMap::new();
        for (name, g) in &config.groups {
            let inst = build_group(g).map_err(|e| CliError::invalid(format!("groups.{name}"), e))?;
            groups.insert(name.clone(), inst);
        }
        let mut grids = BTreeMap::new();
        for (name, g) in &config.grids {
            grids.insert(name.clone(), build_grid(g).map_err(|e| CliError::invalid(format!("grids.{name}"), e))?);
        }
        let mut ctx = Context { groups, models: BTreeMap::new(), grids };
        for (name, m) in &config.models {
            let path = format!("models.{name}");
            let model = match m {
                ModelConfig::Product { group, driver } => {
                    let g = *ctx.group(group, &format!("{path}.group"))?;
                    build_driver(DriverSpace::Algebra(g), driver)
                        .and_then(|d| ProcessModel::product(g, d))
                        .map_err(|e| CliError::invalid(format!("{path}.driver"), e))?
                }
                ModelConfig::Heisenberg { group, x, y, z } => {
                    let g = *ctx.group(group, &format!("{path}.group"))?;
                    let zero = HeisenbergModels::zero(&g).map_err(|e| CliError::invalid(format!("{path}.group"), e))?;
                    let block = |label: &str, space: DriverSpace, d: &DriverConfig| {
                        build_driver(space, d).map_err(|e| CliError::invalid(format!("{path}.{label}"), e))
                    };
                    let drivers = HeisenbergModels {
                        x: block("x", zero.x.space, x)?,
                        y: block("y", zero.y.space, y)?,
                        z: block("z", zero.z.space, z)?,
                    };
                    ProcessModel::Heisenberg { group: g, drivers }
                }
            };
            ctx.models.insert(name.clone(), model);
        }
        let mut seen = BTreeSet::new();
        for (i, e) in config.experiments.iter().enumerate() {
            let path = format!("experiments[{i}]");
            if !valid_name(&e.name) {
                return Err(CliError::invalid(
                    format!("{path}.name"),
                    format!("`{}` is not a valid name (letters, digits, `_`, `-`)", e.name),
                ));
            }
            if e.name == "summary" || !seen.insert(e.name.clone()) {
                return Err(CliError::invalid(
                    format!("{path}.name"),
                    format!("duplicate or reserved name `{}`", e.name),
                ));
            }
            ctx.check_refs(&e.check, &format!("{path}.check.{}", e.check.kind()))?;
        }
        Ok(ctx)
    }

    pub fn group(&self, name: &str, path: &str) -> Result<&GroupInstance, CliError> {
        self.groups.get(name).ok_or_else(|| CliError::invalid(path, format!("unknown group `{name}`")))
    }

    pub fn model(&self, name: &str, path: &str) -> Result<&ProcessModel, CliError> {
        self.models.get(name).ok_or_else(|| CliError::invalid(path, format!("unknown model `{name}`")))
    }

    pub fn grid(&self, name: &str, path: &str) -> Result<&TimeGrid, CliError> {
        self.grids.get(name).ok_or_else(|| CliError::invalid(path, format!("unknown grid `{name}`")))
    }

    fn model_grid(&self, model: &str, grid: &str, path: &str) -> Result<(), CliError> {
        self.model(model, &format!("{path}.model"))?;
        self.grid(grid, &format!("{path}.grid"))?;
        Ok(())
    }

    fn check_refs(&self, check: &Check, path: &str) -> Result<(), CliError> {
        match check {
            Check::KernelSuite(KernelSuite { groups, .. }) | Check::BracketBound(BracketBound { groups, .. }) => {
                for (i, g) in groups.iter().enumerate() {
                    self.group(g, &format!("{path}.groups[{i}]"))?;
                }
                Ok(())
            }
            Check::BallPower(c) => self.group(&c.group, &format!("{path}.group")).map(drop),
            Check::StepCertification(c) => self.group(&c.group, &format!("{path}.group")).map(drop),
            Check::StepTriangle(c) => self.group(&c.group, &format!("{path}.group")).map(drop),
            Check::GaugeTriangle(c) => self.group(&c.group, &format!("{path}.group")).map(drop),
            Check::AdditiveMoments(c) => self.model_grid(&c.model, &c.grid, path),
            Check::SamplePath(c) => self.model_grid(&c.model, &c.grid, path),
            Check::Cocycle(c) => {
                self.model_grid(&c.model, &c.grid, path)?;
                let model = self.model(&c.model, path)?;
                if c.construction == Construction::Exact && !matches!(model, ProcessModel::Heisenberg { .. }) {
                    return Err(CliError::invalid(
                        format!("{path}.construction"),
                        "the exact construction needs a `heisenberg` model",
                    ));
                }
                if let Some(f) = &c.fault {
                    let grid = self.grid(&c.grid, path)?;
                    if f.cell >= grid.cells() {
                        return Err(CliError::invalid(format!("{path}.fault.cell"), "cell index beyond the grid"));
                    }
                    if f.offset.len() != model.group().dim() {
                        return Err(CliError::invalid(
                            format!("{path}.fault.offset"),
                            "offset length must match the group dimension",
                        ));
                    }
                }
                Ok(())
            }
            Check::Convergence(c) => {
                self.model_grid(&c.model, &c.grid, path)?;
                match self.model(&c.model, path)? {
                    ProcessModel::Heisenberg { .. } => Ok(()),
                    _ => Err(CliError::invalid(format!("{path}.model"), "convergence needs a `heisenberg` model")),
                }
            }
            Check::OscillationExhaustive(c) => self.model(&c.model, &format!("{path}.model")).map(drop),
            Check::OscillationAxioms(c) => self.model_grid(&c.model, &c.grid, path),
            Check::MaximumOscillation(c) | Check::LargestStep(c) | Check::ExpectationBound(c) => {
                self.model_grid(&c.model, &c.grid, path)
            }
            Check::ContinuityProbe(c) => self.model(&c.model, &format!("{path}.model")).map(drop),
            Check::DetectorFidelity(c) => self.model_grid(&c.model, &c.grid, path),
            Check::PoissonBattery(c) => self.model_grid(&c.model, &c.grid, path),
            Check::RestartProbe(c) => self.model_grid(&c.model, &c.grid, path),
            Check::BoundedJumps(c) => self.model(&c.model, &format!("{path}.model")).map(drop),
            Check::ExpMoment(c) | Check::TailDecay(c) => self.model_grid(&c.model, &c.grid, path),
            Check::MetricModulus(c) => self.model_grid(&c.model, &c.grid, path),
        }
    }
}
