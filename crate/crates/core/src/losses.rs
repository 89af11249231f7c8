//! Expected losses of a fixed threshold strategy in the limiting model.
//!
//! A loss evaluation puts a single atom at the true scaled gap `d` and runs the
//! same explicit sweep as the risk solver, with the action at each node read
//! from the strategy instead of minimized. The strategy is frozen; only the
//! evaluation world (likelihood weights and diffusion) uses the true variance.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{g_pair, ModelParams, PriorSpec};
use crate::optim::golden_section_max;
use crate::pde::{solve_limit_losses, GridSpec, RiskField};
use crate::quadrature::{GaussianKernel, XGrid};
use crate::strategy::{Action, Policy};

pub const DEFAULT_D_MIN: f64 = -8.0;
pub const DEFAULT_D_MAX: f64 = 8.0;
pub const DEFAULT_POINTS: usize = 81;

fn point_world(d: f64, variance: f64) -> Result<(PriorSpec, ModelParams)> {
    if !d.is_finite() {
        return Err(Error::InvalidArgument(format!("gap must be finite, got {d}")));
    }
    let prior = PriorSpec::point(d)?;
    let params = ModelParams::for_prior(variance, &prior)?;
    Ok((prior, params))
}

/// `l(σ; 0, 0)` for true gap `d` when the world has variance `true_variance`.
/// The grid's time step is refined if the scheme would be unstable at that
/// variance; strategy rows are looked up by nearest time not after.
pub fn eval_limit_losses(policy: &dyn Policy, d: f64, true_variance: f64, grid: &GridSpec) -> Result<f64> {
    Ok(loss_field(policy, d, true_variance, grid)?.risk_at_origin())
}

/// Losses when the fraction `eps0` of the horizon is spent on a forced action
/// before the strategy takes over. Returns `(with, without)` where `without`
/// excludes the cost of the forced stage itself.
///
/// With `Action::Unknown` the forced stage is a probe: the statistic moves by a
/// Gaussian step of variance `eps0·D`, so `without = (l(·, eps0) * f)(0)` and
/// `with = eps0·g2(0,0) + without`. The known arm is absorbing for threshold
/// strategies, so forcing it keeps it to the end: `with = g1(0,0)` and
/// `without = (1 − eps0)·g1(0,0)`.
pub fn eval_with_initial_stage(
    policy: &dyn Policy,
    d: f64,
    variance: f64,
    grid: &GridSpec,
    eps0: f64,
    forced: Action,
) -> Result<(f64, f64)> {
    check_initial_fraction(eps0)?;
    if forced == Action::Known {
        let (prior, params) = point_world(d, variance)?;
        let g1 = g_pair(&prior, &params, 0.0, 0.0)?.g1;
        return Ok((g1, (1.0 - eps0) * g1));
    }
    initial_stage_from_field(&loss_field(policy, d, variance, grid)?, d, variance, eps0)
}

fn check_initial_fraction(eps0: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidArgument(format!("initial fraction must lie in (0, 1), got {eps0}")));
    }
    Ok(())
}

/// The forced-probe decomposition of [`eval_with_initial_stage`] from a loss
/// field already solved for the point prior at `d`.
pub fn initial_stage_from_field(field: &RiskField, d: f64, variance: f64, eps0: f64) -> Result<(f64, f64)> {
    check_initial_fraction(eps0)?;
    let (prior, params) = point_world(d, variance)?;
    let g = field.grid();
    let row = field.row(g.nearest_row(eps0));
    let xgrid = XGrid::new((-g.x_min()).min(g.x_max()), g.dx())?;
    let kernel = GaussianKernel::new(eps0 * variance, &xgrid)?;
    let samples: Vec<f64> = xgrid.xs().iter().map(|&x| g.interpolate(row, x)).collect();
    let without = kernel.convolve_at(&samples, xgrid.origin());
    Ok((eps0 * g_pair(&prior, &params, 0.0, 0.0)?.g2 + without, without))
}

/// Loss field of `policy` for the point prior at `d` in a world with
/// variance `true_variance`.
pub fn loss_field(policy: &dyn Policy, d: f64, true_variance: f64, grid: &GridSpec) -> Result<RiskField> {
    let (prior, params) = point_world(d, true_variance)?;
    solve_limit_losses(policy, &prior, &params, &grid.stable_for(true_variance)?)
}

/// `count` equally spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidArgument(format!("bad range [{lo}, {hi}] with {count} points")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let last = (count - 1) as f64;
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / last).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub d: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub points: Vec<LossPoint>,
    pub strategy_id: String,
    pub design_variance: f64,
    pub true_variance: f64,
}

impl LossCurve {
    pub fn max_loss(&self) -> f64 {
        self.points.iter().map(|p| p.loss).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of points strictly above the left neighbour and not below the
    /// right one, excluding the end points.
    pub fn interior_maxima(&self) -> Vec<usize> {
        let p = &self.points;
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i].loss > p[i - 1].loss && p[i].loss >= p[i + 1].loss)
            .collect()
    }

    /// Largest absolute difference to another curve on the same `d` grid.
    pub fn max_abs_difference(&self, other: &LossCurve) -> Result<f64> {
        if self.points.len() != other.points.len()
            || self.points.iter().zip(&other.points).any(|(a, b)| a.d != b.d)
        {
            return Err(Error::InvalidArgument("loss curves are on different d grids".into()));
        }
        Ok(self.points.iter().zip(&other.points).map(|(a, b)| (a.loss - b.loss).abs()).fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d", "loss"])?;
        for p in &self.points {
            w.write_record([p.d.to_string(), p.loss.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Maps [`eval_limit_losses`] over `d_grid` in parallel.
pub fn sweep_losses(
    policy: &dyn Policy,
    strategy_id: &str,
    d_grid: &[f64],
    design_variance: f64,
    true_variance: f64,
    grid: &GridSpec,
) -> Result<LossCurve> {
    if d_grid.is_empty() {
        return Err(Error::InvalidArgument("d grid is empty".into()));
    }
    if !(design_variance.is_finite() && design_variance > 0.0) {
        return Err(Error::InvalidParams(format!("design variance must be positive, got {design_variance}")));
    }
    let grid = grid.stable_for(true_variance)?;
    let points = d_grid
        .par_iter()
        .map(|&d| Ok(LossPoint { d, loss: eval_limit_losses(policy, d, true_variance, &grid)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LossCurve { points, strategy_id: strategy_id.to_string(), design_variance, true_variance })
}

/// Refines each interior maximum of `curve` by golden-section search between
/// its two neighbours.
pub fn refine_peaks(
    policy: &dyn Policy,
    curve: &LossCurve,
    grid: &GridSpec,
    tol: f64,
) -> Result<Vec<LossPoint>> {
    let grid = grid.stable_for(curve.true_variance)?;
    curve
        .interior_maxima()
        .par_iter()
        .map(|&i| {
            let (lo, hi) = (curve.points[i - 1].d, curve.points[i + 1].d);
            let m = golden_section_max(|d| eval_limit_losses(policy, d, curve.true_variance, &grid), lo, hi, tol)?;
            Ok(LossPoint { d: m.x, loss: m.value })
        })
        .collect()
}
