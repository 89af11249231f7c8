//! Search for the worst two-point prior `P(w = d1) = ρ`, `P(w = −d2) = 1 − ρ`.
//!
//! A coarse lattice over the search box seeds a coordinate-wise golden-section
//! ascent. Both run on the search solver; the winner is re-scored on the final
//! solver. The objective is flat near the optimum, so line searches use a tight
//! tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PriorSpec};
use crate::optim::golden_section_max;
use crate::pde::{extract_thresholds, solve_limit_risk, GridSpec, RiskField};
use crate::registry::RiskSolver;
use crate::strategy::ThresholdStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn lattice(&self, n: usize) -> Vec<f64> {
        if self.is_fixed() || n == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub d1: Interval,
    pub d2: Interval,
    pub rho: Interval,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { d1: Interval::new(0.5, 3.0), d2: Interval::new(1.0, 4.0), rho: Interval::new(0.1, 0.9) }
    }
}

impl SearchBox {
    fn validate(&self) -> Result<()> {
        let ok = |i: &Interval, positive: bool| {
            i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi && (!positive || i.lo > 0.0)
        };
        if !(ok(&self.d1, true) && ok(&self.d2, true) && ok(&self.rho, false) && self.rho.lo >= 0.0 && self.rho.hi <= 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "search box needs positive gaps and rho within [0, 1], got {self:?}"
            )));
        }
        Ok(())
    }

    fn axis(&self, k: usize) -> Interval {
        [self.d1, self.d2, self.rho][k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Lattice points per axis.
    pub lattice: usize,
    /// Bracket width at which a line search stops.
    pub tolerance: f64,
    /// Maximum passes over the three coordinates.
    pub max_sweeps: usize,
    /// A pass improving the risk by less than this ends the ascent.
    pub min_improvement: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { lattice: 5, tolerance: 1e-3, max_sweeps: 6, min_improvement: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub d1: f64,
    pub d2: f64,
    pub rho: f64,
    pub risk: f64,
}

impl Candidate {
    fn coords(&self) -> [f64; 3] {
        [self.d1, self.d2, self.rho]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPriorResult {
    pub d1: f64,
    pub d2: f64,
    pub rho: f64,
    /// Risk of the optimum on the final solver.
    pub risk: f64,
    /// Risk of the optimum on the search solver; no traced candidate exceeds it.
    pub search_risk: f64,
    pub best_lattice_risk: f64,
    /// A coordinate ended within one tolerance of a free box edge.
    pub boundary_warning: bool,
    pub search_solver: String,
    pub final_solver: String,
    pub evaluations: usize,
    pub trace: Vec<Candidate>,
}

impl WorstPriorResult {
    pub fn prior(&self) -> Result<PriorSpec> {
        PriorSpec::two_point(self.d1, self.d2, self.rho)
    }

    pub fn params(&self, variance: f64) -> Result<ModelParams> {
        ModelParams::new(variance, self.d1.max(self.d2))
    }

    /// Risk field and thresholds of the Bayesian strategy for this prior,
    /// which is the minimax strategy when the prior is least favourable.
    pub fn minimax_strategy(&self, variance: f64, grid: &GridSpec) -> Result<(RiskField, ThresholdStrategy)> {
        let (prior, params) = (self.prior()?, self.params(variance)?);
        let field = solve_limit_risk(&prior, &params, &grid.fitted_to(&prior, &params)?)?;
        let strategy = extract_thresholds(&field)?;
        Ok((field, strategy))
    }
}

/// Risk of the two-point prior `(d1, d2, ρ)` with the bound `c = max(d1, d2)`.
pub fn two_point_risk(solver: &dyn RiskSolver, variance: f64, d1: f64, d2: f64, rho: f64) -> Result<f64> {
    let prior = PriorSpec::two_point(d1, d2, rho)?;
    let params = ModelParams::new(variance, d1.max(d2))?;
    solver.risk_at_origin(&prior, &params)
}

pub fn find_worst_prior(
    search: &dyn RiskSolver,
    final_solver: &dyn RiskSolver,
    variance: f64,
    bounds: &SearchBox,
    settings: &SearchSettings,
) -> Result<WorstPriorResult> {
    bounds.validate()?;
    if settings.lattice == 0 || !(settings.tolerance > 0.0) {
        return Err(Error::InvalidArgument("lattice size and tolerance must be positive".into()));
    }
    let eval = |c: [f64; 3]| -> Result<Candidate> {
        let risk = two_point_risk(search, variance, c[0], c[1], c[2])?;
        Ok(Candidate { d1: c[0], d2: c[1], rho: c[2], risk })
    };

    let mut points = Vec::new();
    for &a in &bounds.d1.lattice(settings.lattice) {
        for &b in &bounds.d2.lattice(settings.lattice) {
            for &r in &bounds.rho.lattice(settings.lattice) {
                points.push([a, b, r]);
            }
        }
    }
    let mut trace: Vec<Candidate> = points.par_iter().map(|&c| eval(c)).collect::<Result<_>>()?;
    let lattice_best = *trace
        .iter()
        .max_by(|a, b| a.risk.total_cmp(&b.risk))
        .expect("lattice is non-empty");

    let mut best = lattice_best;
    for _ in 0..settings.max_sweeps {
        let before = best.risk;
        for axis in 0..3 {
            let span = bounds.axis(axis);
            if span.is_fixed() {
                continue;
            }
            let start = best.coords();
            let mut line = Vec::new();
            let m = golden_section_max(
                |v| {
                    let mut c = start;
                    c[axis] = v;
                    let cand = eval(c)?;
                    line.push(cand);
                    Ok(cand.risk)
                },
                span.lo,
                span.hi,
                settings.tolerance,
            )?;
            trace.extend(line);
            if m.value > best.risk {
                let mut c = start;
                c[axis] = m.x;
                best = Candidate { d1: c[0], d2: c[1], rho: c[2], risk: m.value };
            }
        }
        if best.risk - before < settings.min_improvement {
            break;
        }
    }

    let boundary_warning = (0..3).any(|k| {
        let span = bounds.axis(k);
        let v = best.coords()[k];
        !span.is_fixed() && (v - span.lo < settings.tolerance || span.hi - v < settings.tolerance)
    });
    let risk = two_point_risk(final_solver, variance, best.d1, best.d2, best.rho)?;
    Ok(WorstPriorResult {
        d1: best.d1,
        d2: best.d2,
        rho: best.rho,
        risk,
        search_risk: best.risk,
        best_lattice_risk: lattice_best.risk,
        boundary_warning,
        search_solver: search.name().to_string(),
        final_solver: final_solver.name().to_string(),
        evaluations: trace.len() + 1,
        trace,
    })
}
