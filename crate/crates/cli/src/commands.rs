use std::io::Write;
use std::path::{Path, PathBuf};

use bandit_minimax::batchdp::{check_step_invariants, solve_batch_risk};
use bandit_minimax::bernoulli::{default_n0, solve_bernoulli_dp_capped, BernoulliAtom, BernoulliModel};
use bandit_minimax::losses::{eval_with_initial_stage, initial_stage_from_field, linspace, loss_field};
use bandit_minimax::mcsim::{simulate, SimConfig};
use bandit_minimax::pde::{check_invariants, extract_thresholds, solve_limit_risk, GridSpec};
use bandit_minimax::quadrature::XGrid;
use bandit_minimax::registry::{SolverOptions, SolverRegistry};
use bandit_minimax::schedule::{BatchSchedule, ItemSchedule};
use bandit_minimax::worstprior::{find_worst_prior, Interval, SearchBox, SearchSettings};
use bandit_minimax::{Action, Error, ModelConfig, Policy, Result, ThresholdStrategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::*;
use crate::manifest::{dir_of, Run};

fn config_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

/// Reads the model file and applies flag overrides.
fn load_model(m: &ModelArgs) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::from_path(&m.config)?;
    if let Some(v) = m.variance {
        cfg.variance = v;
    }
    if let Some(c) = m.bound {
        cfg.bound = Some(c);
    }
    Ok(cfg)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    dir_of(path).join(name)
}

pub fn solve_pde(a: &SolvePdeArgs, quiet: bool) -> Result<()> {
    let cfg = load_model(&a.model)?;
    let (prior, params) = cfg.resolve()?;
    let grid = a.grid.resolve()?.fitted_to(&prior, &params)?;
    let mut run = Run::start("solve-pde", json!({ "args": config_json(a), "model": cfg, "grid": grid }), quiet);
    run.progress(format!("solving on {} x {} nodes", grid.nt() + 1, grid.nx() + 1));
    let field = solve_limit_risk(&prior, &params, &grid)?;
    let report = check_invariants(&field, &prior, &params);
    let strategy = extract_thresholds(&field)?;

    let mut f = run.create(&a.out_risk)?;
    field.write_csv(&mut f, a.t_stride.max(1), a.x_stride.max(1))?;
    f.flush()?;
    let thr = a.out_threshold.clone().unwrap_or_else(|| sibling(&a.out_risk, "threshold.csv"));
    let mut f = run.create(&thr)?;
    strategy.write_csv(&mut f)?;
    f.flush()?;

    run.summary = json!({ "risk_at_origin": field.risk_at_origin(), "invariants": report, "invariants_hold": report.all_hold() });
    run.progress(format!("r(0,0) = {:.6}", field.risk_at_origin()));
    run.finish(&dir_of(&a.out_risk))?;
    Ok(())
}

pub fn batch_dp(a: &BatchDpArgs, quiet: bool) -> Result<()> {
    let cfg = load_model(&a.model)?;
    let (prior, params) = cfg.resolve()?;
    let schedule: BatchSchedule = a.schedule.parse()?;
    let grid = XGrid::new(a.half_width, a.step)?;
    let mut run = Run::start("batch-dp", json!({ "args": config_json(a), "model": cfg, "stages": schedule.len() }), quiet);
    let field = solve_batch_risk(&prior, &params, &schedule, &grid)?;
    let report = check_step_invariants(&field, &prior, &params)?;

    let mut f = run.create(&a.out)?;
    field.write_csv(&mut f, a.x_stride.max(1))?;
    f.flush()?;
    if let Some(p) = &a.thresholds {
        let mut f = run.create(p)?;
        field.thresholds()?.write_csv(&mut f)?;
        f.flush()?;
    }
    run.summary = json!({
        "risk_at_origin": field.at_origin(),
        "min_value": report.min_value,
        "upper_bound_violation": report.upper_bound_violation,
        "origin_bound_violation": report.origin_bound_violation,
        "single_flip": report.single_flip,
    });
    run.progress(format!("R(0,0) = {:.6}", field.at_origin()));
    run.finish(&dir_of(&a.out))?;
    Ok(())
}

pub fn worst_prior(a: &WorstPriorArgs, quiet: bool) -> Result<()> {
    let variance = match (a.variance, &a.config) {
        (Some(v), _) => v,
        (None, Some(p)) => ModelConfig::from_path(p)?.variance,
        (None, None) => 1.0,
    };
    let schedule: BatchSchedule = a.schedule.parse()?;
    let (search_grid, final_grid) = (a.search_grid()?, a.final_grid()?);
    let registry = SolverRegistry::default();
    let name = a.solver.registry_name();
    let base = SolverOptions { schedule: schedule.clone(), ..SolverOptions::default() };
    let search = registry.build(name, &SolverOptions { grid: search_grid, ..base.clone() })?;
    let fin = registry.build(name, &SolverOptions { grid: final_grid, ..base.clone() })?;
    let bounds = SearchBox {
        d1: Interval::new(a.d1_min, a.d1_max),
        d2: Interval::new(a.d2_min, a.d2_max),
        rho: Interval::new(a.rho_min, a.rho_max),
    };
    let settings = SearchSettings { lattice: a.lattice, tolerance: a.tol, ..SearchSettings::default() };
    let mut run = Run::start(
        "worst-prior",
        json!({ "args": config_json(a), "variance": variance, "search_grid": search_grid, "final_grid": final_grid }),
        quiet,
    );
    run.progress(format!("searching with the {name} solver"));
    let mut result = find_worst_prior(search.as_ref(), fin.as_ref(), variance, &bounds, &settings)?;
    if result.boundary_warning {
        run.progress("warning: optimum lies on the search box boundary");
    }
    if let Some(p) = &a.thresholds {
        let strategy = match a.solver {
            SolverName::Pde => result.minimax_strategy(variance, &final_grid)?.1,
            SolverName::BatchDp => {
                solve_batch_risk(&result.prior()?, &result.params(variance)?, &schedule, &base.xgrid)?.thresholds()?
            }
        };
        let mut f = run.create(p)?;
        strategy.write_csv(&mut f)?;
        f.flush()?;
    }
    if !a.trace {
        result.trace.clear();
    }
    run.write_json(&a.out, &result)?;
    run.summary = json!({
        "d1": result.d1, "d2": result.d2, "rho": result.rho, "risk": result.risk,
        "evaluations": result.evaluations, "boundary_warning": result.boundary_warning,
    });
    run.progress(format!("d1 = {:.4}, d2 = {:.4}, rho = {:.4}, risk = {:.6}", result.d1, result.d2, result.rho, result.risk));
    run.finish(&dir_of(&a.out))?;
    Ok(())
}

/// One row of a loss table; the last two are present with an initial stage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossRow {
    pub d: f64,
    pub loss: f64,
    pub with: Option<f64>,
    pub without: Option<f64>,
}

pub fn loss_rows(
    policy: &dyn Policy,
    ds: &[f64],
    variance: f64,
    grid: &GridSpec,
    initial: Option<(f64, Action)>,
) -> Result<Vec<LossRow>> {
    ds.par_iter()
        .map(|&d| {
            let field = loss_field(policy, d, variance, grid)?;
            let (with, without) = match initial {
                None => (None, None),
                Some((eps0, Action::Unknown)) => {
                    let (w, wo) = initial_stage_from_field(&field, d, variance, eps0)?;
                    (Some(w), Some(wo))
                }
                Some((eps0, forced)) => {
                    let (w, wo) = eval_with_initial_stage(policy, d, variance, grid, eps0, forced)?;
                    (Some(w), Some(wo))
                }
            };
            Ok(LossRow { d, loss: field.risk_at_origin(), with, without })
        })
        .collect()
}

/// Writes `d` followed by one column per named series.
pub fn write_columns<W: Write>(out: W, d: &[f64], columns: &[(&str, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["d".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for (i, x) in d.iter().enumerate() {
        let mut rec = vec![x.to_string()];
        rec.extend(columns.iter().map(|(_, c)| c[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn losses(a: &LossesArgs, quiet: bool) -> Result<()> {
    let strategy = ThresholdStrategy::from_path(&a.strategy)?;
    let grid = a.grid.resolve()?;
    let ds = linspace(a.d_min, a.d_max, a.points)?;
    let forced = if a.forced == ForcedAction::Known { Action::Known } else { Action::Unknown };
    let initial = a.initial_stage.map(|e| (e, forced));
    let mut run = Run::start("losses", json!({ "args": config_json(a), "grid": grid }), quiet);
    run.progress(format!("evaluating {} gaps", ds.len()));
    let rows = loss_rows(&strategy, &ds, a.d_true, &grid, initial)?;
    let mut cols = vec![("loss", rows.iter().map(|r| r.loss).collect::<Vec<_>>())];
    if initial.is_some() {
        cols.push(("loss_with", rows.iter().map(|r| r.with.unwrap_or(f64::NAN)).collect()));
        cols.push(("loss_without", rows.iter().map(|r| r.without.unwrap_or(f64::NAN)).collect()));
    }
    let mut f = run.create(&a.out)?;
    write_columns(&mut f, &ds, &cols)?;
    f.flush()?;
    let (arg, max) = rows.iter().fold((f64::NAN, f64::NEG_INFINITY), |acc, r| if r.loss > acc.1 { (r.d, r.loss) } else { acc });
    run.summary = json!({ "max_loss": max, "argmax_d": arg, "design_variance": a.d_design, "true_variance": a.d_true });
    run.finish(&dir_of(&a.out))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct BernoulliPriorFile {
    atoms: Vec<BernoulliAtom>,
}

pub fn bernoulli_dp(a: &BernoulliArgs, quiet: bool) -> Result<()> {
    let prior = match (&a.prior, &a.mapped_from) {
        (Some(p), _) => serde_json::from_str::<BernoulliPriorFile>(&std::fs::read_to_string(p)?)?.atoms,
        (None, Some(g)) => BernoulliModel::mapped_prior(a.p, &ModelConfig::from_path(g)?.atoms, a.n)?,
        (None, None) => return Err(Error::InvalidArgument("either --prior or --mapped-from is required".into())),
    };
    let model = BernoulliModel::new(a.p, prior, a.n, a.n0.unwrap_or_else(|| default_n0(a.n)))?;
    let mut run = Run::start("bernoulli-dp", json!({ "args": config_json(a), "model": model }), quiet);
    let risk = solve_bernoulli_dp_capped(&model, a.max_n)?;
    run.write_json(&a.out, &json!({ "model": model, "result": risk }))?;
    run.summary = serde_json::to_value(risk)?;
    run.progress(format!("risk = {:.6}, scaled = {:.6}", risk.risk, risk.scaled_risk));
    run.finish(&dir_of(&a.out))?;
    Ok(())
}

pub fn simulate_cmd(a: &SimulateArgs, quiet: bool) -> Result<()> {
    let strategy = ThresholdStrategy::from_path(&a.strategy)?;
    let schedule: ItemSchedule = a.schedule.parse()?;
    let config = SimConfig {
        total_items: a.total_items,
        schedule,
        p: a.p,
        d_grid: linspace(a.d_min, a.d_max, a.points)?,
        reps: a.reps,
        seed: a.seed,
    };
    config.validate()?;
    let mut run = Run::start("simulate", json!({ "args": config_json(a), "config": config }), quiet);
    run.progress(format!("{} gaps x {} replications", config.d_grid.len(), config.reps));
    let result = simulate(&config, &strategy)?;
    let mut f = run.create(&a.out)?;
    result.write_csv(&mut f)?;
    f.flush()?;
    let worst = result.points.iter().map(|p| p.mean).fold(f64::NEG_INFINITY, f64::max);
    run.summary = json!({ "max_mean": worst, "points": result.points.len() });
    run.finish(&dir_of(&a.out))?;
    Ok(())
}
