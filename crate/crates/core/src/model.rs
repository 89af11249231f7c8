//! Statistical model of the Gaussian one-armed bandit in invariant coordinates.
//!
//! The known arm has mean zero. The unknown arm has scaled mean `w`, and the
//! state of the control is the scaled cumulative income `x` of the unknown arm
//! together with the fraction `t` of the horizon already spent on it. A prior
//! on `w` enters every recursion only through the pair
//!
//! ```text
//! g1(x, t) = Σ_{w>0} w · h(w, x, t) · p(w)
//! g2(x, t) = Σ_{w<0} |w| · h(w, x, t) · p(w)
//! h(w, x, t) = exp((x·w − t·w²/2) / D)
//! ```
//!
//! which are the expected one-step regrets of the known and the unknown arm,
//! weighted by the likelihood ratio of the observed statistic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total prior mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Variance of one-step income.
    pub variance: f64,
    /// Bound on the scaled mean, `|w| <= bound`.
    pub bound: f64,
}

impl ModelParams {
    pub fn new(variance: f64, bound: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "variance must be positive and finite, got {variance}"
            )));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidParams(format!(
                "bound must be positive and finite, got {bound}"
            )));
        }
        Ok(Self { variance, bound })
    }

    /// Parameters whose bound is the largest atom magnitude of `prior`.
    pub fn for_prior(variance: f64, prior: &PriorSpec) -> Result<Self> {
        Self::new(variance, prior.max_abs_location().max(f64::MIN_POSITIVE))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: f64,
    pub p: f64,
}

/// Discrete prior on the scaled mean of the unknown arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    atoms: Vec<Atom>,
}

impl PriorSpec {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("prior has no atoms".into()));
        }
        for a in &atoms {
            if !a.w.is_finite() || !a.p.is_finite() {
                return Err(Error::InvalidPrior(format!("non-finite atom {a:?}")));
            }
            if a.p < 0.0 {
                return Err(Error::InvalidPrior(format!("negative mass {}", a.p)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPrior(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Point mass at `w`.
    pub fn point(w: f64) -> Result<Self> {
        Self::new(vec![Atom { w, p: 1.0 }])
    }

    /// Mass `rho` at `d1 > 0` and `1 - rho` at `-d2 < 0`.
    pub fn two_point(d1: f64, d2: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidPrior(format!("rho must lie in [0, 1], got {rho}")));
        }
        Self::new(vec![Atom { w: d1, p: rho }, Atom { w: -d2, p: 1.0 - rho }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn max_abs_location(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).fold(0.0, f64::max)
    }

    /// Both the positive and the negative side carry regret weight.
    pub fn is_two_sided(&self) -> bool {
        let pos = self.atoms.iter().any(|a| a.w > 0.0 && a.p > 0.0);
        let neg = self.atoms.iter().any(|a| a.w < 0.0 && a.p > 0.0);
        pos && neg
    }

    pub fn require_two_sided(&self) -> Result<()> {
        if self.is_two_sided() {
            Ok(())
        } else {
            Err(Error::DegeneratePrior(
                "risk solving needs positive mass on both w > 0 and w < 0".into(),
            ))
        }
    }

    pub fn check_support(&self, params: &ModelParams) -> Result<()> {
        let slack = 1e-12 * params.bound.max(1.0);
        match self.atoms.iter().find(|a| a.w.abs() > params.bound + slack) {
            Some(a) => Err(Error::InvalidPrior(format!(
                "atom at w = {} lies outside [-{b}, {b}]",
                a.w,
                b = params.bound
            ))),
            None => Ok(()),
        }
    }

    /// Prior with every location multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom { w: a.w * factor, p: a.p })
                .collect(),
        )
    }

    /// Expected regret of playing the unknown arm, `Σ_{w<0} |w| p`.
    pub fn negative_gap_mass(&self) -> f64 {
        self.atoms.iter().filter(|a| a.w < 0.0).map(|a| -a.w * a.p).sum()
    }
}

/// Weights `(g1, g2)` at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPair {
    pub g1: f64,
    pub g2: f64,
}

impl GPair {
    pub fn min(&self) -> f64 {
        self.g1.min(self.g2)
    }
}

/// Natural log of the likelihood ratio `h(w, x, t)`.
#[inline]
pub fn log_likelihood_ratio(w: f64, x: f64, t: f64, variance: f64) -> f64 {
    (x * w - 0.5 * t * w * w) / variance
}

#[inline]
pub fn likelihood_ratio(w: f64, x: f64, t: f64, variance: f64) -> f64 {
    log_likelihood_ratio(w, x, t, variance).exp()
}

#[inline]
fn g_pair_unchecked(prior: &PriorSpec, variance: f64, x: f64, t: f64) -> GPair {
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    for a in &prior.atoms {
        if a.p == 0.0 || a.w == 0.0 {
            continue;
        }
        let v = ((a.w.abs() * a.p).ln() + log_likelihood_ratio(a.w, x, t, variance)).exp();
        if a.w > 0.0 {
            g1 += v;
        } else {
            g2 += v;
        }
    }
    GPair { g1, g2 }
}

pub fn g_pair(prior: &PriorSpec, params: &ModelParams, x: f64, t: f64) -> Result<GPair> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("income statistic must be finite, got {x}")));
    }
    Ok(g_pair_unchecked(prior, params.variance, x, t))
}

/// Fills `g1`/`g2` for every node of `xs` at time `t`.
pub(crate) fn g_row(
    prior: &PriorSpec,
    variance: f64,
    xs: &[f64],
    t: f64,
    g1: &mut [f64],
    g2: &mut [f64],
) {
    for ((x, o1), o2) in xs.iter().zip(g1.iter_mut()).zip(g2.iter_mut()) {
        let g = g_pair_unchecked(prior, variance, *x, t);
        *o1 = g.g1;
        *o2 = g.g2;
    }
}

/// On-disk model description: `{"atoms": [{"w": .., "p": ..}], "D": .., "c": ..}`.
///
/// `c` may be omitted, in which case the largest atom magnitude is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(rename = "D", default = "default_variance")]
    pub variance: f64,
    #[serde(rename = "c", default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

fn default_variance() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { atoms: Vec::new(), variance: 1.0, bound: None }
    }
}

impl ModelConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        PriorSpec::new(self.atoms.clone())
    }

    /// Validated prior and parameters, with the support checked against `c`.
    pub fn resolve(&self) -> Result<(PriorSpec, ModelParams)> {
        let prior = self.prior()?;
        let params = match self.bound {
            Some(c) => ModelParams::new(self.variance, c)?,
            None => ModelParams::for_prior(self.variance, &prior)?,
        };
        prior.check_support(&params)?;
        Ok((prior, params))
    }
}
