//! Limiting free-boundary problem for the Bayesian risk.
//!
//! The risk `r(x, t)` satisfies
//!
//! ```text
//! min((1 − t)·g1 − r,  r_t + (D/2)·r_xx + g2) = 0,   r(x, 1) = 0,   r → 0 as |x| → ∞
//! ```
//!
//! and is approximated by the explicit backward scheme
//!
//! ```text
//! r1 = (1 − t)·g1(x, t)
//! r2 = r(x, t + Δt) + Δt·((D/2)·Δ²r(x, t + Δt) + g2(x, t))
//! r  = min(r1, r2)
//! ```
//!
//! on a truncated `x` range whose edge nodes are held at zero. The scheme is
//! monotone while `D·Δt/Δx² < 1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{g_pair, g_row, ModelParams, PriorSpec};
use crate::strategy::{Action, Chooser, Policy, ThresholdStrategy};

const LATTICE_TOLERANCE: f64 = 1e-9;

/// Largest `min(g1, g2)` at `t = 0` tolerated on an edge node by
/// [`GridSpec::fitted_to`].
pub const EDGE_RISK_TOLERANCE: f64 = 1e-4;

/// Space-time lattice on `[x_min, x_max] × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    dx: f64,
    dt: f64,
    nx: usize,
    nt: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, dx: f64, dt: f64) -> Result<Self> {
        if ![x_min, x_max, dx, dt].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("grid parameters must be finite".into()));
        }
        if !(x_min < 0.0 && 0.0 < x_max) {
            return Err(Error::InvalidGrid(format!(
                "x range must straddle zero, got [{x_min}, {x_max}]"
            )));
        }
        if !(dx > 0.0 && dt > 0.0 && dt <= 1.0) {
            return Err(Error::InvalidGrid(format!("steps must be positive, got dx={dx} dt={dt}")));
        }
        let cells = (x_max - x_min) / dx;
        let steps = 1.0 / dt;
        if (cells - cells.round()).abs() > LATTICE_TOLERANCE * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "(x_max - x_min)/dx = {cells} is not an integer"
            )));
        }
        if (steps - steps.round()).abs() > LATTICE_TOLERANCE * steps.max(1.0) {
            return Err(Error::InvalidGrid(format!("1/dt = {steps} is not an integer")));
        }
        let ratio = dt / (dx * dx);
        if ratio >= 1.0 {
            return Err(Error::UnstableGrid(format!(
                "explicit scheme needs dt/dx^2 < 1, got {ratio:.6} (dt={dt}, dx={dx})"
            )));
        }
        Ok(Self { x_min, x_max, dx, dt, nx: cells.round() as usize, nt: steps.round() as usize })
    }

    /// Grid on `[-L, L]` where `L` is `half_width` rounded to a whole number of
    /// space steps, so that `x = 0` is a node.
    pub fn symmetric(half_width: f64, dx: f64, dt: f64) -> Result<Self> {
        if !(half_width > 0.0 && dx > 0.0) {
            return Err(Error::InvalidGrid("half width and dx must be positive".into()));
        }
        let m = (half_width / dx).round().max(1.0);
        Self::new(-m * dx, m * dx, dx, dt)
    }

    /// Production lattice: `Δt = 1/5000`, `Δx = 0.0143`, `x ∈ [−6, 6]`.
    pub fn production() -> Self {
        Self::symmetric(6.0, 0.0143, 1.0 / 5000.0).expect("production grid is valid")
    }

    /// Coarse lattice used for searches and quick checks: `Δt = 1/2000`, `Δx = 0.025`.
    pub fn coarse() -> Self {
        Self::symmetric(6.0, 0.025, 1.0 / 2000.0).expect("coarse grid is valid")
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Number of space cells; there are `nx + 1` nodes.
    pub fn nx(&self) -> usize {
        self.nx
    }
    /// Number of time steps; rows `0..=nt`, row `nt` is `t = 1`.
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| self.x(i)).collect()
    }

    pub fn diffusion_ratio(&self, variance: f64) -> f64 {
        variance * self.dt / (self.dx * self.dx)
    }

    pub fn check_stable_for(&self, variance: f64) -> Result<()> {
        let ratio = self.diffusion_ratio(variance);
        if ratio >= 1.0 {
            Err(Error::UnstableGrid(format!(
                "explicit scheme needs D*dt/dx^2 < 1, got {ratio:.6} (D={variance}, dt={}, dx={})",
                self.dt, self.dx
            )))
        } else {
            Ok(())
        }
    }

    /// Same space lattice with the time step refined, if needed, so that
    /// `D·Δt/Δx² <= 0.98`.
    pub fn stable_for(&self, variance: f64) -> Result<Self> {
        if self.diffusion_ratio(variance) < 1.0 {
            return Ok(*self);
        }
        let steps = (variance / (0.98 * self.dx * self.dx)).ceil();
        Self::new(self.x_min, self.x_max, self.dx, 1.0 / steps)
    }

    /// Lattice widened, in whole space steps, until the risk bound
    /// `min(g1, g2)` at `t = 0` is below [`EDGE_RISK_TOLERANCE`] on both edge
    /// nodes, so the zero edge rows stay consistent with the decay of `r`.
    /// Priors with small atoms decay slowly and need more than `±6`.
    pub fn fitted_to(&self, prior: &PriorSpec, params: &ModelParams) -> Result<Self> {
        let edge = |x: f64| -> Result<f64> { Ok(g_pair(prior, params, x, 0.0)?.min()) };
        let step = (1.0 / self.dx).ceil() * self.dx;
        let (mut lo, mut hi) = (self.x_min, self.x_max);
        for _ in 0..200 {
            let (left, right) = (edge(lo)? > EDGE_RISK_TOLERANCE, edge(hi)? > EDGE_RISK_TOLERANCE);
            if !left && !right {
                return if lo == self.x_min && hi == self.x_max {
                    Ok(*self)
                } else {
                    Self::new(lo, hi, self.dx, self.dt)
                };
            }
            if left {
                lo -= step;
            }
            if right {
                hi += step;
            }
        }
        Err(Error::InvalidGrid(format!(
            "risk does not decay within x in [{lo}, {hi}]; the prior has atoms too close to zero"
        )))
    }

    /// Row whose time is closest to `t`.
    pub fn nearest_row(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.nt)
    }

    /// Linear interpolation of a row of node values at `x`; zero outside the range.
    pub fn interpolate(&self, row: &[f64], x: f64) -> f64 {
        if !(x >= self.x_min && x <= self.x_max) {
            return 0.0;
        }
        let pos = (x - self.x_min) / self.dx;
        let i = (pos.floor() as usize).min(self.nx.saturating_sub(1));
        let frac = pos - i as f64;
        if frac.abs() < 1e-12 {
            return row[i];
        }
        row[i] * (1.0 - frac) + row[i + 1] * frac
    }
}

/// Risk values on the lattice together with the minimizing action per node.
#[derive(Debug, Clone)]
pub struct RiskField {
    grid: GridSpec,
    values: Vec<f64>,
    actions: Vec<Action>,
    gaps: Vec<f64>,
}

impl RiskField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn width(&self) -> usize {
        self.grid.nx + 1
    }

    /// Values at row `j` (`0..=nt`).
    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.width();
        &self.values[j * w..(j + 1) * w]
    }

    /// Chosen actions at decision row `j` (`0..nt`).
    pub fn actions(&self, j: usize) -> &[Action] {
        let w = self.width();
        &self.actions[j * w..(j + 1) * w]
    }

    /// `r1 − r2` at decision row `j`.
    pub fn gaps(&self, j: usize) -> &[f64] {
        let w = self.width();
        &self.gaps[j * w..(j + 1) * w]
    }

    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.width() + i]
    }

    pub fn value_at(&self, j: usize, x: f64) -> f64 {
        self.grid.interpolate(self.row(j), x)
    }

    /// Scaled Bayesian risk `r(0, 0)`.
    pub fn risk_at_origin(&self) -> f64 {
        self.value_at(0, 0.0)
    }

    /// Writes `t,x,r,action` for every `t_stride`-th row and `x_stride`-th node.
    /// The terminal row carries no decision and is reported with action 0.
    pub fn write_csv<W: Write>(&self, out: W, t_stride: usize, x_stride: usize) -> Result<()> {
        let t_stride = t_stride.max(1);
        let x_stride = x_stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "r", "action"])?;
        for j in (0..=self.grid.nt).step_by(t_stride) {
            let t = self.grid.t(j).to_string();
            for i in (0..=self.grid.nx).step_by(x_stride) {
                let action = if j < self.grid.nt { self.actions(j)[i].index() } else { 0 };
                w.write_record([
                    t.clone(),
                    self.grid.x(i).to_string(),
                    self.value(j, i).to_string(),
                    action.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves the limiting risk equation for a prior with mass on both sides of zero.
pub fn solve_limit_risk(prior: &PriorSpec, params: &ModelParams, grid: &GridSpec) -> Result<RiskField> {
    prior.require_two_sided()?;
    solve_limit_risk_relaxed(prior, params, grid)
}

fn sweep(prior: &PriorSpec, params: &ModelParams, grid: &GridSpec, chooser: Chooser<'_>) -> Result<RiskField> {
    grid.check_stable_for(params.variance)?;
    prior.check_support(params)?;

    let w = grid.nx + 1;
    let nt = grid.nt;
    let xs = grid.xs();
    let mut values = vec![0.0; (nt + 1) * w];
    let mut actions = vec![Action::Known; nt * w];
    let mut gaps = vec![0.0; nt * w];
    let mut g1 = vec![0.0; w];
    let mut g2 = vec![0.0; w];
    let half_d = 0.5 * params.variance;
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);

    for j in (0..nt).rev() {
        let t = grid.t(j);
        g_row(prior, params.variance, &xs, t, &mut g1, &mut g2);
        let (head, tail) = values.split_at_mut((j + 1) * w);
        let next = &tail[..w];
        let cur = &mut head[j * w..];
        let act = &mut actions[j * w..(j + 1) * w];
        let gap = &mut gaps[j * w..(j + 1) * w];
        for i in 1..w - 1 {
            let lap = (next[i + 1] - 2.0 * next[i] + next[i - 1]) * inv_dx2;
            let r2 = next[i] + grid.dt * (half_d * lap + g2[i]);
            let r1 = (1.0 - t) * g1[i];
            gap[i] = r1 - r2;
            act[i] = chooser.choose(r1, r2, xs[i], t)?;
            cur[i] = if act[i] == Action::Known { r1 } else { r2 };
        }
        cur[0] = 0.0;
        cur[w - 1] = 0.0;
        act[0] = act[1];
        act[w - 1] = act[w - 2];
        gap[0] = gap[1];
        gap[w - 1] = gap[w - 2];
    }

    Ok(RiskField { grid: *grid, values, actions, gaps })
}

/// As [`solve_limit_risk`] but accepts one-sided priors, for which the risk is
/// identically zero.
pub fn solve_limit_risk_relaxed(prior: &PriorSpec, params: &ModelParams, grid: &GridSpec) -> Result<RiskField> {
    sweep(prior, params, grid, Chooser::Minimize)
}

/// Limiting expected losses of a fixed policy: the same sweep with the action
/// at every node dictated by `policy`. Boundary nodes stay at zero.
pub fn solve_limit_losses(
    policy: &dyn Policy,
    prior: &PriorSpec,
    params: &ModelParams,
    grid: &GridSpec,
) -> Result<RiskField> {
    sweep(prior, params, grid, Chooser::Follow(policy))
}

enum RowFlip {
    At(f64),
    AllKnown,
    AllUnknown,
}

fn locate_flip(xs: &[f64], actions: &[Action], gaps: &[f64]) -> Result<RowFlip> {
    let n = xs.len();
    if n < 2 || actions.len() != n || gaps.len() != n {
        return Err(Error::InvalidArgument("row arrays must have equal length >= 2".into()));
    }
    let mut flip = None;
    for i in 0..n - 1 {
        if actions[i] != actions[i + 1] {
            if actions[i] == Action::Unknown || flip.is_some() {
                return Err(Error::Integrity(format!(
                    "action row is not a single 1->2 threshold (second change near x = {})",
                    xs[i]
                )));
            }
            flip = Some(i);
        }
    }
    Ok(match flip {
        Some(i) => {
            let (a, b) = (gaps[i], gaps[i + 1]);
            let frac = if b != a { (-a / (b - a)).clamp(0.0, 1.0) } else { 0.5 };
            RowFlip::At(xs[i] + (xs[i + 1] - xs[i]) * frac)
        }
        None if actions[0] == Action::Unknown => RowFlip::AllUnknown,
        None => RowFlip::AllKnown,
    })
}

/// Location of the single `1 → 2` action flip in a row, by linear
/// interpolation of `r1 − r2`. A row playing action 2 throughout reports its
/// first node, a row playing action 1 throughout its last node.
pub fn threshold_in_row(xs: &[f64], actions: &[Action], gaps: &[f64]) -> Result<f64> {
    Ok(match locate_flip(xs, actions, gaps)? {
        RowFlip::At(x) => x,
        RowFlip::AllUnknown => xs[0],
        RowFlip::AllKnown => xs[xs.len() - 1],
    })
}

/// Threshold curve of the strategy that attains the minimum in every row.
/// Only interior nodes are inspected; rows without a flip report the lattice edge.
pub fn extract_thresholds(field: &RiskField) -> Result<ThresholdStrategy> {
    let grid = field.grid;
    let xs = grid.xs();
    let interior = 1..grid.nx;
    let mut ts = Vec::with_capacity(grid.nt);
    let mut thr = Vec::with_capacity(grid.nt);
    for j in 0..grid.nt {
        let flip = locate_flip(
            &xs[interior.clone()],
            &field.actions(j)[interior.clone()],
            &field.gaps(j)[interior.clone()],
        )
        .map_err(|e| match e {
            Error::Integrity(msg) => Error::Integrity(format!("row t = {}: {msg}", grid.t(j))),
            other => other,
        })?;
        ts.push(grid.t(j));
        thr.push(match flip {
            RowFlip::At(x) => x,
            RowFlip::AllUnknown => grid.x_min,
            RowFlip::AllKnown => grid.x_max,
        });
    }
    ThresholdStrategy::new(ts, thr)
}

/// Upper risk bound `0.752·√D` valid for every prior.
pub fn risk_cap(variance: f64) -> f64 {
    0.752 * variance.sqrt()
}

/// Largest violation of each structural property of a solved risk field.
/// A check passes when its violation is `<= 0`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InvariantReport {
    pub terminal_max_abs: f64,
    pub min_value: f64,
    pub upper_bound_violation: f64,
    pub derivative_bound_violation: f64,
    pub time_lipschitz_violation: f64,
    pub risk_cap_violation: f64,
    pub single_flip: bool,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.terminal_max_abs == 0.0
            && self.min_value >= 0.0
            && self.upper_bound_violation <= 0.0
            && self.derivative_bound_violation <= 0.0
            && self.time_lipschitz_violation <= 0.0
            && self.risk_cap_violation <= 0.0
            && self.single_flip
    }
}

/// Checks terminal zero, non-negativity, `r <= (1−t)·min(g1, g2) + 10Δt`,
/// `|r_x| <= (c/D)·r + 10Δx`, the time-Lipschitz bound for lags of 1, 10 and
/// 100 steps (slack `10Δt`), the cap `0.752·√D`, and single-flip rows.
pub fn check_invariants(field: &RiskField, prior: &PriorSpec, params: &ModelParams) -> InvariantReport {
    let grid = field.grid;
    let w = grid.nx + 1;
    let xs = grid.xs();
    let c = params.bound;
    let cp = c / params.variance;
    let mut report = InvariantReport {
        terminal_max_abs: field.row(grid.nt).iter().fold(0.0, |m, v| m.max(v.abs())),
        min_value: field.values.iter().cloned().fold(f64::INFINITY, f64::min),
        upper_bound_violation: f64::NEG_INFINITY,
        derivative_bound_violation: f64::NEG_INFINITY,
        time_lipschitz_violation: f64::NEG_INFINITY,
        risk_cap_violation: field.risk_at_origin() - risk_cap(params.variance),
        single_flip: true,
    };
    let mut g1 = vec![0.0; w];
    let mut g2 = vec![0.0; w];
    for j in 0..grid.nt {
        let t = grid.t(j);
        let row = field.row(j);
        g_row(prior, params.variance, &xs, t, &mut g1, &mut g2);
        for i in 0..w {
            let bound = (1.0 - t) * g1[i].min(g2[i]) + 10.0 * grid.dt;
            report.upper_bound_violation = report.upper_bound_violation.max(row[i] - bound);
        }
        for i in 1..w - 1 {
            let deriv = (row[i + 1] - row[i - 1]) / (2.0 * grid.dx);
            let bound = cp * row[i] + 10.0 * grid.dx;
            report.derivative_bound_violation =
                report.derivative_bound_violation.max(deriv.abs() - bound);
        }
        for lag in [1usize, 10, 100] {
            if j + lag > grid.nt {
                continue;
            }
            let delta = lag as f64 * grid.dt;
            let later = field.row(j + lag);
            for i in 0..w {
                let bound = delta * c * (0.5 * c * cp * (1.0 - t - delta) + 1.0) * (cp * xs[i].abs()).exp()
                    + 10.0 * grid.dt;
                report.time_lipschitz_violation =
                    report.time_lipschitz_violation.max((row[i] - later[i]).abs() - bound);
            }
        }
        let interior = 1..grid.nx;
        if locate_flip(&xs[interior.clone()], &field.actions(j)[interior.clone()], &field.gaps(j)[interior])
            .is_err()
        {
            report.single_flip = false;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_prior() -> PriorSpec {
        PriorSpec::two_point(1.65, 2.52, 0.38).unwrap()
    }

    fn unit_params() -> ModelParams {
        ModelParams::new(1.0, 2.52).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(GridSpec::new(-1.0, 1.0, 0.01, 0.001), Err(Error::UnstableGrid(_))));
        assert!(GridSpec::new(0.0, 1.0, 0.1, 0.001).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 0.3, 0.001).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 0.1, 0.003).is_err());
        let g = GridSpec::new(-1.0, 1.0, 0.1, 0.001).unwrap();
        assert_eq!((g.nx(), g.nt()), (20, 1000));
        let p = GridSpec::production();
        assert_eq!(p.nt(), 5000);
        assert!((p.x_max() - 6.006).abs() < 1e-12);
        assert!(p.dt() / (p.dx() * p.dx()) < 1.0);
    }

    #[test]
    fn stable_for_refines_time_step() {
        let p = GridSpec::production();
        assert!(p.check_stable_for(1.05).is_err());
        let s = p.stable_for(1.05).unwrap();
        assert!(s.check_stable_for(1.05).is_ok());
        assert_eq!(s.dx(), p.dx());
        assert_eq!(p.stable_for(0.5).unwrap(), p);
    }

    #[test]
    fn one_sided_negative_prior_has_zero_risk() {
        let prior = PriorSpec::new(vec![
            crate::model::Atom { w: -1.0, p: 0.5 },
            crate::model::Atom { w: -2.0, p: 0.5 },
        ])
        .unwrap();
        let params = ModelParams::new(1.0, 2.0).unwrap();
        assert!(matches!(
            solve_limit_risk(&prior, &params, &GridSpec::coarse()),
            Err(Error::DegeneratePrior(_))
        ));
        let field = solve_limit_risk_relaxed(&prior, &params, &GridSpec::coarse()).unwrap();
        assert!(field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_prior_risk_on_coarse_grid() {
        let field = solve_limit_risk(&reference_prior(), &unit_params(), &GridSpec::coarse()).unwrap();
        let r = field.risk_at_origin();
        assert!((r - 0.37).abs() <= 0.02, "r(0,0) = {r}");
        let report = check_invariants(&field, &reference_prior(), &unit_params());
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn threshold_interpolation_midpoint() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let acts = [Action::Known, Action::Known, Action::Unknown, Action::Unknown];
        let gaps = [-2.0, -1.0, 1.0, 2.0];
        assert_eq!(threshold_in_row(&xs, &acts, &gaps).unwrap(), 1.5);
    }

    #[test]
    fn threshold_row_without_flip() {
        let xs = [0.0, 1.0, 2.0];
        let all2 = [Action::Unknown; 3];
        let all1 = [Action::Known; 3];
        assert_eq!(threshold_in_row(&xs, &all2, &[1.0; 3]).unwrap(), 0.0);
        assert_eq!(threshold_in_row(&xs, &all1, &[-1.0; 3]).unwrap(), 2.0);
    }

    #[test]
    fn multiple_flips_are_integrity_errors() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let acts = [Action::Known, Action::Unknown, Action::Known, Action::Unknown];
        let err = threshold_in_row(&xs, &acts, &[-1.0, 1.0, -1.0, 1.0]).unwrap_err();
        assert!(err.is_integrity());
        let reversed = [Action::Unknown, Action::Known, Action::Known, Action::Known];
        assert!(threshold_in_row(&xs, &reversed, &[1.0, -1.0, -1.0, -1.0]).unwrap_err().is_integrity());
    }

    #[test]
    fn thresholds_shrink_toward_terminal_time() {
        let grid = GridSpec::coarse();
        let field = solve_limit_risk(&reference_prior(), &unit_params(), &grid).unwrap();
        let strategy = extract_thresholds(&field).unwrap();
        let n = strategy.len();
        let tail = &strategy.thresholds()[n - n / 10..];
        assert!(tail.iter().all(|&v| v < 0.0));
        assert!(tail.windows(2).all(|w| w[1].abs() <= w[0].abs() + 1e-12), "{tail:?}");
    }

    #[test]
    fn extracted_thresholds_reproduce_actions() {
        let grid = GridSpec::coarse();
        let field = solve_limit_risk(&reference_prior(), &unit_params(), &grid).unwrap();
        let strategy = extract_thresholds(&field).unwrap();
        use crate::strategy::Policy;
        for j in (0..grid.nt()).step_by(97) {
            for i in 1..grid.nx() {
                let a = strategy.action(grid.x(i), grid.t(j)).unwrap();
                if field.gaps(j)[i] != 0.0 {
                    assert_eq!(a, field.actions(j)[i], "row {j} node {i}");
                }
            }
        }
    }

    #[test]
    fn fitting_widens_only_slowly_decaying_priors() {
        let g = GridSpec::coarse();
        let prior = PriorSpec::two_point(1.65, 2.52, 0.38).unwrap();
        let params = ModelParams::for_prior(1.0, &prior).unwrap();
        assert_eq!(g.fitted_to(&prior, &params).unwrap(), g);

        let prior = PriorSpec::two_point(0.5, 1.0, 0.7).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let wide = g.fitted_to(&prior, &params).unwrap();
        assert!(wide.x_min() < -16.0 && wide.x_max() > 8.0);
        assert_eq!((wide.dx(), wide.dt()), (g.dx(), g.dt()));
        for x in [wide.x_min(), wide.x_max()] {
            assert!(g_pair(&prior, &params, x, 0.0).unwrap().min() <= EDGE_RISK_TOLERANCE);
        }
        let narrow = solve_limit_risk(&prior, &params, &g).unwrap();
        let fitted = solve_limit_risk(&prior, &params, &wide).unwrap();
        // The zero edge rows spoil the derivative bound next to x = -6 only.
        assert!(!check_invariants(&narrow, &prior, &params).all_hold());
        assert!(check_invariants(&fitted, &prior, &params).all_hold());
        assert!((narrow.risk_at_origin() - fitted.risk_at_origin()).abs() < 1e-6);
    }

    #[test]
    fn risk_csv_has_expected_shape() {
        let grid = GridSpec::new(-1.0, 1.0, 0.25, 0.05).unwrap();
        let prior = PriorSpec::two_point(0.5, 0.5, 0.5).unwrap();
        let params = ModelParams::new(1.0, 0.5).unwrap();
        let field = solve_limit_risk(&prior, &params, &grid).unwrap();
        let mut buf = Vec::new();
        field.write_csv(&mut buf, 1, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 21 * 9);
        assert_eq!(text.lines().next().unwrap(), "t,x,r,action");
    }
}
