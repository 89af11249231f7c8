//! Exact batch recursions in invariant coordinates.
//!
//! With a batch schedule `ε_1, …, ε_K` and stage start times `t_i`, the
//! Bayesian risk solves
//!
//! ```text
//! r1(x, t_i) = (1 − t_i)·g1(x, t_i)
//! r2(x, t_i) = ε_i·g2(x, t_i) + ∫ r(x − y, t_{i+1}) f_{ε_i D}(y) dy
//! r(x, t_i)  = min(r1, r2),      r(·, 1) = 0
//! ```
//!
//! and the scaled Bayesian risk is `r(0, 0)`. The known arm is absorbing, which
//! is what allows the first branch to be written in closed form; the
//! full-history recursion over `(s, x, t)` is kept in [`verify_absorbing`] as
//! an oracle for that reduction.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{g_pair, g_row, ModelParams, PriorSpec};
use crate::pde::threshold_in_row;
use crate::quadrature::{GaussianKernel, XGrid};
use crate::schedule::{BatchSchedule, ItemSchedule};
use crate::strategy::{Action, Chooser, Policy, ThresholdStrategy};

/// Largest stage count accepted by the batch solvers.
pub const MAX_STAGES: usize = 10_000;

/// Largest stage count accepted by the full-history oracle.
pub const MAX_FULL_HISTORY_STAGES: usize = 6;

/// Per-stage values on the quadrature grid. Stage `K` is the terminal zero row.
#[derive(Debug, Clone)]
pub struct StepField {
    schedule: BatchSchedule,
    grid: XGrid,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    actions: Vec<Vec<Action>>,
    gaps: Vec<Vec<f64>>,
}

/// Risk per stage, minimized over actions.
pub type StepRiskField = StepField;
/// Losses per stage of a fixed strategy.
pub type StepLossField = StepField;

impl StepField {
    pub fn schedule(&self) -> &BatchSchedule {
        &self.schedule
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }

    pub fn stages(&self) -> usize {
        self.schedule.len()
    }

    /// Start time of stage `i`; `time(K) = 1`.
    pub fn time(&self, stage: usize) -> f64 {
        self.times[stage]
    }

    pub fn values(&self, stage: usize) -> &[f64] {
        &self.values[stage]
    }

    pub fn actions(&self, stage: usize) -> &[Action] {
        &self.actions[stage]
    }

    /// `value1 − value2` per node at a decision stage.
    pub fn gaps(&self, stage: usize) -> &[f64] {
        &self.gaps[stage]
    }

    /// Value at `(0, 0)`: the scaled Bayesian risk or the scaled expected loss.
    pub fn at_origin(&self) -> f64 {
        self.values[0][self.grid.origin()]
    }

    pub fn value_at(&self, stage: usize, x: f64) -> f64 {
        self.grid.interpolate(&self.values[stage], x)
    }

    /// Threshold per decision stage, with the lattice edges standing in for
    /// stages that never or always switch.
    pub fn thresholds(&self) -> Result<ThresholdStrategy> {
        let xs = self.grid.xs();
        let mut thr = Vec::with_capacity(self.stages());
        for i in 0..self.stages() {
            thr.push(threshold_in_row(&xs, &self.actions[i], &self.gaps[i]).map_err(|e| match e {
                Error::Integrity(m) => Error::Integrity(format!("stage {i}: {m}")),
                other => other,
            })?);
        }
        ThresholdStrategy::new(self.times[..self.stages()].to_vec(), thr)
    }

    /// Writes `stage,t,x,r,action`; the terminal stage has action 0.
    pub fn write_csv<W: Write>(&self, out: W, x_stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "t", "x", "r", "action"])?;
        for stage in 0..=self.stages() {
            let t = self.times[stage].to_string();
            for i in (0..self.grid.len()).step_by(x_stride.max(1)) {
                let action = if stage < self.stages() { self.actions[stage][i].index() } else { 0 };
                w.write_record([
                    stage.to_string(),
                    t.clone(),
                    self.grid.x(i).to_string(),
                    self.values[stage][i].to_string(),
                    action.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Kernels for every stage that convolves a non-terminal row, keyed by the
/// batch fraction.
fn stage_kernels(schedule: &BatchSchedule, variance: f64, grid: &XGrid) -> Result<HashMap<u64, GaussianKernel>> {
    let mut kernels = HashMap::new();
    let k = schedule.len();
    for &eps in &schedule.fractions()[..k - 1] {
        if let std::collections::hash_map::Entry::Vacant(e) = kernels.entry(eps.to_bits()) {
            e.insert(GaussianKernel::new(eps * variance, grid)?);
        }
    }
    Ok(kernels)
}

fn check_stage_count(schedule: &BatchSchedule) -> Result<()> {
    if schedule.len() > MAX_STAGES {
        return Err(Error::TooLarge(format!(
            "{} stages exceed the batch solver limit of {MAX_STAGES}",
            schedule.len()
        )));
    }
    Ok(())
}

fn backward(
    prior: &PriorSpec,
    params: &ModelParams,
    schedule: &BatchSchedule,
    grid: &XGrid,
    chooser: Chooser<'_>,
) -> Result<StepField> {
    check_stage_count(schedule)?;
    prior.check_support(params)?;
    let kernels = stage_kernels(schedule, params.variance, grid)?;
    let k = schedule.len();
    let n = grid.len();
    let xs = grid.xs();
    let times = schedule.stage_times();
    let mut values = vec![vec![0.0; n]; k + 1];
    let mut actions = vec![vec![Action::Known; n]; k];
    let mut gaps = vec![vec![0.0; n]; k];
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    let mut smoothed = vec![0.0; n];

    for stage in (0..k).rev() {
        let t = times[stage];
        let eps = schedule.fractions()[stage];
        g_row(prior, params.variance, &xs, t, &mut g1, &mut g2);
        if stage + 1 < k {
            kernels[&eps.to_bits()].convolve(&values[stage + 1], &mut smoothed);
        } else {
            smoothed.iter_mut().for_each(|v| *v = 0.0);
        }
        let (head, _) = values.split_at_mut(stage + 1);
        let cur = &mut head[stage];
        for i in 0..n {
            let v1 = (1.0 - t) * g1[i];
            let v2 = eps * g2[i] + smoothed[i];
            gaps[stage][i] = v1 - v2;
            let a = chooser.choose(v1, v2, xs[i], t)?;
            actions[stage][i] = a;
            cur[i] = if a == Action::Known { v1 } else { v2 };
        }
    }
    Ok(StepField { schedule: schedule.clone(), grid: *grid, times, values, actions, gaps })
}

/// Bayesian risk under a batch schedule, for a prior with mass on both sides.
pub fn solve_batch_risk(
    prior: &PriorSpec,
    params: &ModelParams,
    schedule: &BatchSchedule,
    grid: &XGrid,
) -> Result<StepRiskField> {
    prior.require_two_sided()?;
    solve_batch_risk_relaxed(prior, params, schedule, grid)
}

/// As [`solve_batch_risk`] but accepts one-sided priors.
pub fn solve_batch_risk_relaxed(
    prior: &PriorSpec,
    params: &ModelParams,
    schedule: &BatchSchedule,
    grid: &XGrid,
) -> Result<StepRiskField> {
    backward(prior, params, schedule, grid, Chooser::Minimize)
}

/// Expected losses of `policy` under a batch schedule. The policy is queried at
/// every node of every stage.
pub fn solve_batch_losses(
    policy: &dyn Policy,
    prior: &PriorSpec,
    params: &ModelParams,
    schedule: &BatchSchedule,
    grid: &XGrid,
) -> Result<StepLossField> {
    backward(prior, params, schedule, grid, Chooser::Follow(policy))
}

/// Losses when the first batch is forced onto the unknown arm: the total
/// `ε_1·g2(0,0) + (l(·, t_1) * f)(0)` and the convolution term alone.
pub fn forced_first_batch(field: &StepLossField, prior: &PriorSpec, params: &ModelParams) -> Result<(f64, f64)> {
    let eps = field.schedule.fractions()[0];
    let probe_cost = eps * g_pair(prior, params, 0.0, 0.0)?.g2;
    let carried = if field.stages() > 1 {
        GaussianKernel::new(eps * params.variance, &field.grid)?.convolve_at(&field.values[1], field.grid.origin())
    } else {
        0.0
    };
    Ok((probe_cost + carried, carried))
}

/// Risk `R(0, 0)` of the batch recursion in absolute units: `N` items split
/// into batches of the given sizes, prior on the unscaled mean `m`, and the
/// unscaled cumulative income `X` on `grid`.
pub fn solve_absolute_risk(
    prior: &PriorSpec,
    variance: f64,
    batches: &ItemSchedule,
    grid: &XGrid,
) -> Result<f64> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::InvalidParams(format!("variance must be positive, got {variance}")));
    }
    prior.require_two_sided()?;
    let sizes = batches.sizes();
    if sizes.len() > MAX_STAGES {
        return Err(Error::TooLarge(format!("{} stages exceed {MAX_STAGES}", sizes.len())));
    }
    let total = batches.total();
    let n = grid.len();
    let xs = grid.xs();
    let mut kernels: HashMap<usize, GaussianKernel> = HashMap::new();
    for &m in &sizes[..sizes.len() - 1] {
        if let std::collections::hash_map::Entry::Vacant(e) = kernels.entry(m) {
            e.insert(GaussianKernel::new(m as f64 * variance, grid)?);
        }
    }
    let mut starts = Vec::with_capacity(sizes.len());
    let mut acc = 0usize;
    for &m in sizes {
        starts.push(acc);
        acc += m;
    }
    let mut next = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut smoothed = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    for stage in (0..sizes.len()).rev() {
        let m = sizes[stage];
        let played = starts[stage];
        g_row(prior, variance, &xs, played as f64, &mut g1, &mut g2);
        if stage + 1 < sizes.len() {
            kernels[&m].convolve(&next, &mut smoothed);
        } else {
            smoothed.iter_mut().for_each(|v| *v = 0.0);
        }
        for i in 0..n {
            let v1 = (total - played) as f64 * g1[i];
            let v2 = m as f64 * g2[i] + smoothed[i];
            cur[i] = v1.min(v2);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(next[grid.origin()])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub base_risk: f64,
    pub transformed_risk: f64,
    /// `transformed_risk / base_risk`.
    pub ratio: f64,
    /// `√k`.
    pub expected_ratio: f64,
}

impl ScalingReport {
    pub fn ratio_error(&self) -> f64 {
        (self.ratio - self.expected_ratio).abs()
    }
}

/// Solves the batch recursion before and after the substitution
/// `D → kD`, `w → √k·w`, `x → √k·x` and compares the risks, which must differ by
/// the factor `√k`.
pub fn verify_scaling(
    prior: &PriorSpec,
    params: &ModelParams,
    schedule: &BatchSchedule,
    k: f64,
    grid: &XGrid,
) -> Result<ScalingReport> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {k}")));
    }
    let root = k.sqrt();
    let base = solve_batch_risk(prior, params, schedule, grid)?.at_origin();
    let mapped_prior = prior.scaled(root)?;
    let mapped_params = ModelParams::new(k * params.variance, root * params.bound)?;
    let transformed =
        solve_batch_risk(&mapped_prior, &mapped_params, schedule, &grid.scaled(root))?.at_origin();
    Ok(ScalingReport { base_risk: base, transformed_risk: transformed, ratio: transformed / base, expected_ratio: root })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingReport {
    /// `N^{-1/2}·R` for `K` batches of `M` items with the prior shrunk by `M^{-1/2}`.
    pub batched_scaled: f64,
    /// `K^{-1/2}·R` for `K` single items.
    pub single_scaled: f64,
}

impl GroupingReport {
    pub fn difference(&self) -> f64 {
        (self.batched_scaled - self.single_scaled).abs()
    }
}

/// Compares `K` batches of `M` items on the parameter set shrunk by `M^{-1/2}`
/// with `K` one-by-one steps, in absolute units. `prior` is on the
/// one-by-one mean; `grid` is the one-by-one income grid and is stretched by
/// `√M` for the batched run.
pub fn verify_grouping(
    prior: &PriorSpec,
    variance: f64,
    batches: usize,
    batch_size: usize,
    grid: &XGrid,
) -> Result<GroupingReport> {
    if batches == 0 || batch_size == 0 {
        return Err(Error::InvalidArgument("batch count and size must be positive".into()));
    }
    let root_m = (batch_size as f64).sqrt();
    let single = solve_absolute_risk(prior, variance, &ItemSchedule::uniform(batches, 1)?, grid)?;
    let batched = solve_absolute_risk(
        &prior.scaled(1.0 / root_m)?,
        variance,
        &ItemSchedule::uniform(batches, batch_size)?,
        &grid.scaled(root_m),
    )?;
    let total = (batches * batch_size) as f64;
    Ok(GroupingReport {
        batched_scaled: batched / total.sqrt(),
        single_scaled: single / (batches as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    /// `r(0, 0, 0)` of the full-history recursion.
    pub full_risk: f64,
    /// `r(0, 0)` of the reduced recursion.
    pub reduced_risk: f64,
    /// States where the known arm is optimal but is not optimal one stage later.
    pub absorbing_violations: usize,
    pub checked_states: usize,
}

impl AbsorbingReport {
    pub fn difference(&self) -> f64 {
        (self.full_risk - self.reduced_risk).abs()
    }
}

/// Solves the full-history recursion over `(s, x, t)` with `K` uniform stages
/// and compares it with the reduced recursion. Also counts states where the
/// known arm stops being optimal after it was chosen.
pub fn verify_absorbing(
    prior: &PriorSpec,
    params: &ModelParams,
    stages: usize,
    grid: &XGrid,
) -> Result<AbsorbingReport> {
    if stages == 0 || stages > MAX_FULL_HISTORY_STAGES {
        return Err(Error::TooLarge(format!(
            "full-history oracle needs 1..={MAX_FULL_HISTORY_STAGES} stages, got {stages}"
        )));
    }
    prior.require_two_sided()?;
    prior.check_support(params)?;
    let schedule = BatchSchedule::uniform(stages)?;
    let eps = 1.0 / stages as f64;
    let n = grid.len();
    let xs = grid.xs();
    let kernel = if stages > 1 { Some(GaussianKernel::new(eps * params.variance, grid)?) } else { None };

    // Indexed by [known stages][unknown stages], both up to K.
    let mut value = vec![vec![vec![0.0; n]; stages + 1]; stages + 1];
    let mut known_best = vec![vec![Vec::<bool>::new(); stages + 1]; stages + 1];
    let mut g1 = vec![vec![0.0; n]; stages];
    let mut g2 = vec![vec![0.0; n]; stages];
    for (j, (r1, r2)) in g1.iter_mut().zip(g2.iter_mut()).enumerate() {
        g_row(prior, params.variance, &xs, j as f64 * eps, r1, r2);
    }
    let mut smoothed = vec![0.0; n];
    for used in (0..stages).rev() {
        for s in 0..=used {
            let t = used - s;
            if t + 1 + s < stages {
                kernel.as_ref().expect("kernel exists for K > 1").convolve(&value[s][t + 1], &mut smoothed);
            } else {
                smoothed.iter_mut().for_each(|v| *v = 0.0);
            }
            let mut row = vec![0.0; n];
            let mut best = vec![false; n];
            for i in 0..n {
                let v1 = eps * g1[t][i] + value[s + 1][t][i];
                let v2 = eps * g2[t][i] + smoothed[i];
                best[i] = v1 <= v2;
                row[i] = v1.min(v2);
            }
            value[s][t] = row;
            known_best[s][t] = best;
        }
    }

    let mut violations = 0;
    let mut checked = 0;
    for s in 0..stages {
        for t in 0..stages - s {
            if s + 1 + t >= stages {
                continue;
            }
            for i in 0..n {
                if known_best[s][t][i] {
                    checked += 1;
                    if !known_best[s + 1][t][i] {
                        violations += 1;
                    }
                }
            }
        }
    }

    let reduced = solve_batch_risk(prior, params, &schedule, grid)?.at_origin();
    Ok(AbsorbingReport {
        full_risk: value[0][0][grid.origin()],
        reduced_risk: reduced,
        absorbing_violations: violations,
        checked_states: checked,
    })
}

/// Largest violations of the structural bounds on a solved risk field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInvariantReport {
    pub min_value: f64,
    /// `max(r − (1 − t)·min(g1, g2))`, relative slack `1e-6` applied.
    pub upper_bound_violation: f64,
    /// `r(0,0) − [ε g2(0,0) + (1 − ε)·(min(g1, g2)(·, ε) * f)(0)]`.
    pub origin_bound_violation: f64,
    pub single_flip: bool,
}

impl StepInvariantReport {
    pub fn all_hold(&self) -> bool {
        self.min_value >= 0.0
            && self.upper_bound_violation <= 0.0
            && self.origin_bound_violation <= 0.0
            && self.single_flip
    }
}

pub fn check_step_invariants(field: &StepRiskField, prior: &PriorSpec, params: &ModelParams) -> Result<StepInvariantReport> {
    let grid = field.grid;
    let n = grid.len();
    let xs = grid.xs();
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    let mut upper = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    for stage in 0..=field.stages() {
        min_value = field.values[stage].iter().cloned().fold(min_value, f64::min);
        if stage == field.stages() {
            break;
        }
        let t = field.times[stage];
        g_row(prior, params.variance, &xs, t, &mut g1, &mut g2);
        for i in 0..n {
            let bound = (1.0 - t) * g1[i].min(g2[i]);
            upper = upper.max(field.values[stage][i] - bound - 1e-6 * bound - 1e-12);
        }
    }
    let eps = field.schedule.fractions()[0];
    let origin_bound = if field.stages() > 1 {
        g_row(prior, params.variance, &xs, eps, &mut g1, &mut g2);
        let mins: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a.min(*b)).collect();
        let kernel = GaussianKernel::new(eps * params.variance, &grid)?;
        eps * g_pair(prior, params, 0.0, 0.0)?.g2 + (1.0 - eps) * kernel.convolve_at(&mins, grid.origin())
    } else {
        g_pair(prior, params, 0.0, 0.0)?.g2
    };
    let origin = field.at_origin() - origin_bound - 1e-6 * origin_bound - 1e-12;
    Ok(StepInvariantReport {
        min_value,
        upper_bound_violation: upper,
        origin_bound_violation: origin,
        single_flip: field.thresholds().is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;
    use crate::strategy::FixedPolicy;

    fn reference_prior() -> PriorSpec {
        PriorSpec::two_point(1.65, 2.52, 0.38).unwrap()
    }

    fn unit_params() -> ModelParams {
        ModelParams::new(1.0, 2.52).unwrap()
    }

    fn grid() -> XGrid {
        XGrid::new(6.0, 0.01).unwrap()
    }

    #[test]
    fn single_batch_is_min_of_weights() {
        let f = solve_batch_risk(&reference_prior(), &unit_params(), &BatchSchedule::uniform(1).unwrap(), &grid()).unwrap();
        assert!((f.at_origin() - 0.627).abs() < 1e-14);
    }

    #[test]
    fn one_sided_prior_has_zero_risk() {
        let prior = PriorSpec::new(vec![Atom { w: -1.0, p: 0.3 }, Atom { w: -2.0, p: 0.7 }]).unwrap();
        let params = ModelParams::new(1.0, 2.0).unwrap();
        let schedule = BatchSchedule::uniform(10).unwrap();
        assert!(matches!(solve_batch_risk(&prior, &params, &schedule, &grid()), Err(Error::DegeneratePrior(_))));
        let f = solve_batch_risk_relaxed(&prior, &params, &schedule, &grid()).unwrap();
        assert!((0..=10).all(|s| f.values(s).iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn known_arm_forever_loses_full_gap() {
        let params = ModelParams::new(1.0, 2.0).unwrap();
        let schedule = BatchSchedule::uniform(20).unwrap();
        let policy = FixedPolicy(Action::Known);
        let pos = solve_batch_losses(&policy, &PriorSpec::point(1.3).unwrap(), &params, &schedule, &grid()).unwrap();
        assert!((pos.at_origin() - 1.3).abs() < 1e-12);
        let neg = solve_batch_losses(&policy, &PriorSpec::point(-1.3).unwrap(), &params, &schedule, &grid()).unwrap();
        assert_eq!(neg.at_origin(), 0.0);
    }

    #[test]
    fn unknown_arm_forever_loses_full_gap_when_worse() {
        let params = ModelParams::new(1.0, 2.0).unwrap();
        let schedule = BatchSchedule::uniform(20).unwrap();
        let policy = FixedPolicy(Action::Unknown);
        let neg = solve_batch_losses(&policy, &PriorSpec::point(-0.8).unwrap(), &params, &schedule, &grid()).unwrap();
        // Quadrature carries the martingale h forward with relative error ~1e-9.
        assert!((neg.at_origin() - 0.8).abs() < 1e-7, "{}", neg.at_origin());
    }

    #[test]
    fn narrow_grid_rejected() {
        let narrow = XGrid::new(0.5, 0.01).unwrap();
        let r = solve_batch_risk(&reference_prior(), &unit_params(), &BatchSchedule::uniform(4).unwrap(), &narrow);
        assert!(matches!(r, Err(Error::QuadratureTooNarrow(_))));
    }

    #[test]
    fn absolute_and_invariant_forms_agree() {
        // R(0,0) = N^{1/2} r_ε(0,0) under w = √N m, x = X/√N.
        let n_items = 40usize;
        let m = 4usize;
        let root = (n_items as f64).sqrt();
        let prior_m = PriorSpec::two_point(1.65 / root, 2.52 / root, 0.38).unwrap();
        let xgrid = grid();
        let absolute =
            solve_absolute_risk(&prior_m, 1.0, &ItemSchedule::uniform(n_items / m, m).unwrap(), &xgrid.scaled(root))
                .unwrap();
        let scaled = solve_batch_risk(&reference_prior(), &unit_params(), &BatchSchedule::uniform(n_items / m).unwrap(), &xgrid)
            .unwrap()
            .at_origin();
        assert!((absolute / root - scaled).abs() < 1e-10, "{absolute} {scaled}");
    }

    #[test]
    fn unit_scale_is_identity() {
        let r = verify_scaling(&reference_prior(), &unit_params(), &BatchSchedule::uniform(5).unwrap(), 1.0, &grid()).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn absorbing_single_stage() {
        let r = verify_absorbing(&reference_prior(), &unit_params(), 1, &grid()).unwrap();
        assert!((r.full_risk - 0.627).abs() < 1e-14);
        assert!((r.reduced_risk - 0.627).abs() < 1e-14);
        assert!(verify_absorbing(&reference_prior(), &unit_params(), 7, &grid()).is_err());
    }

    #[test]
    fn invariants_hold_for_uniform_schedule() {
        let f = solve_batch_risk(&reference_prior(), &unit_params(), &BatchSchedule::uniform(20).unwrap(), &grid()).unwrap();
        let rep = check_step_invariants(&f, &reference_prior(), &unit_params()).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
    }

    #[test]
    fn forced_first_batch_matches_recursion() {
        let prior = PriorSpec::point(-1.0).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let schedule = BatchSchedule::uniform(10).unwrap();
        let f = solve_batch_losses(&FixedPolicy(Action::Unknown), &prior, &params, &schedule, &grid()).unwrap();
        let (with, without) = forced_first_batch(&f, &prior, &params).unwrap();
        assert!((with - f.at_origin()).abs() < 1e-12);
        assert!((with - without - 0.1).abs() < 1e-12);
    }

    #[test]
    fn csv_output_shape() {
        let f = solve_batch_risk(&reference_prior(), &unit_params(), &BatchSchedule::uniform(2).unwrap(), &XGrid::new(6.0, 0.5).unwrap());
        // Step 0.5 under-resolves σ = 0.707 only when fewer than 7 taps fit: 6σ/0.5 = 8 taps.
        let f = f.unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "stage,t,x,r,action");
        assert_eq!(text.lines().count(), 1 + 3 * 25);
    }
}
