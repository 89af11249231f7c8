//! Data products behind figures 1 to 6, each in its own `figN/` directory
//! with a manifest.

use std::io::Write;
use std::path::PathBuf;

use bandit_minimax::batchdp::{forced_first_batch, solve_batch_losses, solve_batch_risk};
use bandit_minimax::losses::{initial_stage_from_field, linspace, loss_field, refine_peaks, LossCurve, LossPoint};
use bandit_minimax::mcsim::{simulate, SimConfig, SimResult};
use bandit_minimax::pde::GridSpec;
use bandit_minimax::quadrature::XGrid;
use bandit_minimax::registry::PdeSolver;
use bandit_minimax::schedule::{BatchSchedule, ItemSchedule};
use bandit_minimax::worstprior::{find_worst_prior, SearchBox, SearchSettings, WorstPriorResult};
use bandit_minimax::{Action, ModelParams, PriorSpec, Result, RiskField, ThresholdStrategy};
use rayon::prelude::*;
use serde_json::json;

use crate::args::ReproduceArgs;
use crate::commands::{loss_rows, write_columns};
use crate::manifest::Run;

const INITIAL_FRACTION: f64 = 0.02;
const SIM_TOTAL: usize = 5000;
const SIM_P: f64 = 0.5;
const UNIFORM_ITEMS: &str = "50x100";
const VARIABLE_ITEMS: &str = "8x25,48x100";
const PEAK_GAP: f64 = 1.65;

struct Settings {
    search_grid: GridSpec,
    final_grid: GridSpec,
    search: SearchSettings,
    loss_grid: GridSpec,
    points: usize,
    xgrid: XGrid,
}

impl Settings {
    fn new(fast: bool) -> Result<Self> {
        Ok(if fast {
            Settings {
                search_grid: GridSpec::symmetric(6.0, 0.05, 1.0 / 500.0)?,
                final_grid: GridSpec::coarse(),
                search: SearchSettings { lattice: 3, tolerance: 0.02, max_sweeps: 2, ..SearchSettings::default() },
                loss_grid: GridSpec::coarse(),
                points: 17,
                xgrid: XGrid::new(6.0, 0.05)?,
            }
        } else {
            Settings {
                search_grid: GridSpec::coarse(),
                final_grid: GridSpec::production(),
                search: SearchSettings::default(),
                loss_grid: GridSpec::production(),
                points: 81,
                xgrid: XGrid::new(6.0, 0.01)?,
            }
        })
    }
}

struct Minimax {
    result: WorstPriorResult,
    field: RiskField,
    strategy: ThresholdStrategy,
}

struct Context<'a> {
    args: &'a ReproduceArgs,
    quiet: bool,
    settings: Settings,
    minimax: Option<Minimax>,
    /// Loss of the limit strategy at `D = 1` on `gaps()`.
    base_curve: Option<Vec<f64>>,
    batch_strategies: Vec<(usize, ThresholdStrategy)>,
}

impl Context<'_> {
    fn dir(&self, fig: u8) -> PathBuf {
        self.args.out_dir.join(format!("fig{fig}"))
    }

    fn run(&self, fig: u8) -> Run {
        Run::start(
            "reproduce",
            json!({ "figure": fig, "fast": self.args.fast, "reps": self.args.reps, "seed": self.args.seed }),
            self.quiet,
        )
    }

    fn gaps(&self) -> Result<Vec<f64>> {
        linspace(-8.0, 8.0, self.settings.points)
    }

    fn minimax(&mut self, run: &Run) -> Result<&Minimax> {
        if self.minimax.is_none() {
            run.progress("searching for the worst two-point prior");
            let s = &self.settings;
            let result = find_worst_prior(
                &PdeSolver { grid: s.search_grid },
                &PdeSolver { grid: s.final_grid },
                1.0,
                &SearchBox::default(),
                &s.search,
            )?;
            run.progress(format!(
                "worst prior d1 = {:.4}, d2 = {:.4}, rho = {:.4}, risk = {:.6}",
                result.d1, result.d2, result.rho, result.risk
            ));
            let (field, strategy) = result.minimax_strategy(1.0, &s.final_grid)?;
            self.minimax = Some(Minimax { result, field, strategy });
        }
        Ok(self.minimax.as_ref().expect("just computed"))
    }

    fn strategy(&mut self, run: &Run) -> Result<ThresholdStrategy> {
        Ok(self.minimax(run)?.strategy.clone())
    }

    /// Bayesian strategy of the worst prior under `k` equal batches.
    fn batch_strategy(&mut self, run: &Run, k: usize) -> Result<ThresholdStrategy> {
        if let Some((_, s)) = self.batch_strategies.iter().find(|(n, _)| *n == k) {
            return Ok(s.clone());
        }
        let m = self.minimax(run)?;
        let (prior, params) = (m.result.prior()?, m.result.params(1.0)?);
        let s = solve_batch_risk(&prior, &params, &BatchSchedule::uniform(k)?, &self.settings.xgrid)?.thresholds()?;
        self.batch_strategies.push((k, s.clone()));
        Ok(s)
    }

    fn base_curve(&mut self, run: &Run) -> Result<Vec<f64>> {
        if self.base_curve.is_none() {
            let strategy = self.strategy(run)?;
            run.progress("loss curve at D = 1");
            let rows = loss_rows(&strategy, &self.gaps()?, 1.0, &self.settings.loss_grid, None)?;
            self.base_curve = Some(rows.iter().map(|r| r.loss).collect());
        }
        Ok(self.base_curve.clone().expect("just computed"))
    }
}

pub fn reproduce(args: &ReproduceArgs, quiet: bool) -> Result<()> {
    let figures = args.figures()?;
    let mut ctx = Context {
        args,
        quiet,
        settings: Settings::new(args.fast)?,
        minimax: None,
        base_curve: None,
        batch_strategies: Vec::new(),
    };
    for fig in figures {
        match fig {
            1 => fig1(&mut ctx)?,
            2 => fig2(&mut ctx)?,
            3 => fig3(&mut ctx)?,
            4 => robustness(&mut ctx, 4, &[0.95, 1.05])?,
            5 => robustness(&mut ctx, 5, &[0.75, 0.5, 0.25])?,
            6 => fig6(&mut ctx)?,
            _ => unreachable!("figures are validated"),
        }
    }
    Ok(())
}

/// Worst prior, its thresholds and a thinned risk field.
fn fig1(ctx: &mut Context) -> Result<()> {
    let dir = ctx.dir(1);
    let mut run = ctx.run(1);
    let m = ctx.minimax(&run)?;
    run.write_json(&dir.join("worst.json"), &m.result)?;
    let mut f = run.create(&dir.join("threshold.csv"))?;
    m.strategy.write_csv(&mut f)?;
    f.flush()?;
    let g = m.field.grid();
    let mut f = run.create(&dir.join("risk.csv"))?;
    m.field.write_csv(&mut f, (g.nt() / 100).max(1), 4)?;
    f.flush()?;
    run.summary = json!({
        "d1": m.result.d1, "d2": m.result.d2, "rho": m.result.rho,
        "risk": m.result.risk, "search_risk": m.result.search_risk,
        "boundary_warning": m.result.boundary_warning,
    });
    run.finish(&dir)?;
    Ok(())
}

/// Loss curve with and without a forced initial probe, plus refined peaks.
fn fig2(ctx: &mut Context) -> Result<()> {
    let dir = ctx.dir(2);
    let mut run = ctx.run(2);
    let strategy = ctx.strategy(&run)?;
    let ds = ctx.gaps()?;
    run.progress("loss curve with an initial stage");
    let rows = loss_rows(&strategy, &ds, 1.0, &ctx.settings.loss_grid, Some((INITIAL_FRACTION, Action::Unknown)))?;
    let loss: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    ctx.base_curve.get_or_insert_with(|| loss.clone());
    let mut f = run.create(&dir.join("losses.csv"))?;
    write_columns(
        &mut f,
        &ds,
        &[
            ("loss", loss.clone()),
            ("loss_with", rows.iter().map(|r| r.with.unwrap_or(f64::NAN)).collect()),
            ("loss_without", rows.iter().map(|r| r.without.unwrap_or(f64::NAN)).collect()),
        ],
    )?;
    f.flush()?;
    let curve = LossCurve {
        points: ds.iter().zip(&loss).map(|(&d, &l)| LossPoint { d, loss: l }).collect(),
        strategy_id: "minimax".into(),
        design_variance: 1.0,
        true_variance: 1.0,
    };
    run.progress("refining peaks");
    let peaks = refine_peaks(&strategy, &curve, &ctx.settings.loss_grid, 1e-3)?;
    let risk = ctx.minimax(&run)?.result.risk;
    run.write_json(&dir.join("peaks.json"), &json!({ "risk": risk, "peaks": peaks }))?;
    run.summary = json!({ "risk": risk, "peaks": peaks, "max_loss": curve.max_loss() });
    run.finish(&dir)?;
    Ok(())
}

/// Batch strategies for 30 and 50 batches with the first batch forced onto
/// the unknown arm, next to the limit strategy with the same initial stage.
fn fig3(ctx: &mut Context) -> Result<()> {
    let dir = ctx.dir(3);
    let mut run = ctx.run(3);
    let ds = ctx.gaps()?;
    let limit = ctx.strategy(&run)?;
    let grid = ctx.settings.loss_grid;
    let xgrid = ctx.settings.xgrid;
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    for k in [30usize, 50] {
        run.progress(format!("{k} batches"));
        let strategy = ctx.batch_strategy(&run, k)?;
        let schedule = BatchSchedule::uniform(k)?;
        let pairs = ds
            .par_iter()
            .map(|&d| {
                let prior = PriorSpec::point(d)?;
                let params = ModelParams::for_prior(1.0, &prior)?;
                let field = solve_batch_losses(&strategy, &prior, &params, &schedule, &xgrid)?;
                forced_first_batch(&field, &prior, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        cols.push((format!("batch{k}_with"), pairs.iter().map(|p| p.0).collect()));
        cols.push((format!("batch{k}_without"), pairs.iter().map(|p| p.1).collect()));
    }
    run.progress("limit strategy with the same initial stages");
    let limit_rows = ds
        .par_iter()
        .map(|&d| {
            let field = loss_field(&limit, d, 1.0, &grid)?;
            let a = initial_stage_from_field(&field, d, 1.0, 1.0 / 30.0)?;
            let b = initial_stage_from_field(&field, d, 1.0, 1.0 / 50.0)?;
            Ok([field.risk_at_origin(), a.0, a.1, b.0, b.1])
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, name) in ["limit", "limit30_with", "limit30_without", "limit50_with", "limit50_without"].iter().enumerate() {
        cols.push((name.to_string(), limit_rows.iter().map(|r| r[i]).collect()));
    }
    let named: Vec<(&str, Vec<f64>)> = cols.iter().map(|(n, c)| (n.as_str(), c.clone())).collect();
    let mut f = run.create(&dir.join("losses.csv"))?;
    write_columns(&mut f, &ds, &named)?;
    f.flush()?;
    let max_of = |name: &str| named.iter().find(|(n, _)| *n == name).map(|(_, c)| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    run.summary = json!({
        "max_batch30_with": max_of("batch30_with"),
        "max_batch50_with": max_of("batch50_with"),
        "max_limit": max_of("limit"),
    });
    run.finish(&dir)?;
    Ok(())
}

/// Loss curves of the `D = 1` strategy evaluated under other variances.
fn robustness(ctx: &mut Context, fig: u8, variances: &[f64]) -> Result<()> {
    let dir = ctx.dir(fig);
    let mut run = ctx.run(fig);
    let ds = ctx.gaps()?;
    let strategy = ctx.strategy(&run)?;
    let base = ctx.base_curve(&run)?;
    let mut cols = vec![("loss_D1".to_string(), base.clone())];
    for &v in variances {
        run.progress(format!("loss curve at D = {v}"));
        let rows = loss_rows(&strategy, &ds, v, &ctx.settings.loss_grid, None)?;
        cols.push((format!("loss_D{v}"), rows.iter().map(|r| r.loss).collect()));
    }
    let named: Vec<(&str, Vec<f64>)> = cols.iter().map(|(n, c)| (n.as_str(), c.clone())).collect();
    let mut f = run.create(&dir.join("losses.csv"))?;
    write_columns(&mut f, &ds, &named)?;
    f.flush()?;
    let peak = |c: &[f64]| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let stats: Vec<_> = cols[1..]
        .iter()
        .map(|(n, c)| {
            let diff = c.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            json!({ "column": n, "peak": peak(c), "max_abs_difference": diff })
        })
        .collect();
    run.summary = json!({ "peak_D1": peak(&base), "curves": stats });
    run.finish(&dir)?;
    Ok(())
}

fn sim_config(ds: &[f64], schedule: &str, reps: usize, seed: u64) -> Result<SimConfig> {
    Ok(SimConfig {
        total_items: SIM_TOTAL,
        schedule: schedule.parse::<ItemSchedule>()?,
        p: SIM_P,
        d_grid: ds.to_vec(),
        reps,
        seed,
    })
}

fn write_sim(run: &mut Run, path: PathBuf, result: &SimResult) -> Result<()> {
    let mut f = run.create(&path)?;
    result.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Monte Carlo batch processing under uniform and variable batch sizes next
/// to the limit loss curve.
fn fig6(ctx: &mut Context) -> Result<()> {
    let dir = ctx.dir(6);
    let mut run = ctx.run(6);
    let mut ds = linspace(-12.0, 4.0, 33)?;
    ds.push(PEAK_GAP);
    ds.sort_by(f64::total_cmp);
    let (reps, seed) = (ctx.args.reps, ctx.args.seed);
    let limit = ctx.strategy(&run)?;
    let batch = ctx.batch_strategy(&run, 50)?;

    run.progress("limit loss curve");
    let rows = loss_rows(&limit, &ds, 1.0, &ctx.settings.loss_grid, None)?;
    let mut f = run.create(&dir.join("losses.csv"))?;
    write_columns(&mut f, &ds, &[("loss", rows.iter().map(|r| r.loss).collect())])?;
    f.flush()?;

    run.progress(format!("simulating {UNIFORM_ITEMS} with {reps} replications"));
    let uniform = simulate(&sim_config(&ds, UNIFORM_ITEMS, reps, seed)?, &batch)?;
    write_sim(&mut run, dir.join("sim.csv"), &uniform)?;
    run.progress(format!("simulating {VARIABLE_ITEMS}"));
    let variable = simulate(&sim_config(&ds, VARIABLE_ITEMS, reps, seed)?, &batch)?;
    write_sim(&mut run, dir.join("sim_variable.csv"), &variable)?;
    run.progress("simulating the limit strategy at batch boundaries");
    let limit_sim = simulate(&sim_config(&ds, UNIFORM_ITEMS, reps, seed)?, &limit)?;
    write_sim(&mut run, dir.join("sim_limit_strategy.csv"), &limit_sim)?;

    let at = |r: &SimResult, d: f64| r.points.iter().find(|p| p.d == d).copied();
    let peak_row = rows.iter().find(|r| r.d == PEAK_GAP).map(|r| r.loss);
    let (u, v) = (at(&uniform, -10.0), at(&variable, -10.0));
    run.summary = json!({
        "peak_gap": PEAK_GAP,
        "simulated_at_peak": at(&uniform, PEAK_GAP),
        "limit_loss_at_peak": peak_row,
        "uniform_at_minus_10": u,
        "variable_at_minus_10": v,
    });
    run.finish(&dir)?;
    Ok(())
}
