//! Named risk solvers selectable at runtime.

use std::collections::BTreeMap;
use std::fmt;

use crate::batchdp::solve_batch_risk_relaxed;
use crate::error::{Error, Result};
use crate::model::{ModelParams, PriorSpec};
use crate::pde::{solve_limit_risk_relaxed, GridSpec, RiskField};
use crate::quadrature::XGrid;
use crate::schedule::BatchSchedule;

/// Computes the scaled Bayesian risk `r(0, 0)` of a prior.
pub trait RiskSolver: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn risk_at_origin(&self, prior: &PriorSpec, params: &ModelParams) -> Result<f64>;
}

/// Limiting risk by the explicit finite-difference scheme. The `x` range is
/// widened per prior by [`GridSpec::fitted_to`].
#[derive(Debug, Clone, Copy)]
pub struct PdeSolver {
    pub grid: GridSpec,
}

impl PdeSolver {
    pub fn solve(&self, prior: &PriorSpec, params: &ModelParams) -> Result<RiskField> {
        solve_limit_risk_relaxed(prior, params, &self.grid.fitted_to(prior, params)?)
    }
}

impl RiskSolver for PdeSolver {
    fn name(&self) -> &str {
        "pde"
    }

    fn risk_at_origin(&self, prior: &PriorSpec, params: &ModelParams) -> Result<f64> {
        Ok(self.solve(prior, params)?.risk_at_origin())
    }
}

/// Risk under a batch schedule by the exact batch recursion.
#[derive(Debug, Clone)]
pub struct BatchSolver {
    pub schedule: BatchSchedule,
    pub grid: XGrid,
}

impl RiskSolver for BatchSolver {
    fn name(&self) -> &str {
        "batch-dp"
    }

    fn risk_at_origin(&self, prior: &PriorSpec, params: &ModelParams) -> Result<f64> {
        Ok(solve_batch_risk_relaxed(prior, params, &self.schedule, &self.grid)?.at_origin())
    }
}

/// Inputs a solver factory may draw on.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub grid: GridSpec,
    pub schedule: BatchSchedule,
    pub xgrid: XGrid,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::production(),
            schedule: BatchSchedule::uniform(50).expect("50 batches is a valid schedule"),
            xgrid: XGrid::new(6.0, 0.01).expect("static quadrature grid"),
        }
    }
}

type Factory = fn(&SolverOptions) -> Box<dyn RiskSolver>;

pub struct SolverRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, options: &SolverOptions) -> Result<Box<dyn RiskSolver>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown solver {name:?}; available: {}", self.names().join(", ")))
        })?;
        Ok(factory(options))
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("pde", |o| Box::new(PdeSolver { grid: o.grid }));
        r.register("batch-dp", |o| Box::new(BatchSolver { schedule: o.schedule.clone(), grid: o.xgrid }));
        r
    }
}
