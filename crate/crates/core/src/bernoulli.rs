//! Exact Bayesian dynamic programming for the Bernoulli one-armed bandit.
//!
//! Method 1 succeeds with known probability `p`; method 2 with unknown `p2`
//! drawn from a discrete prior. Method 2 is forced for the first `n0` items.
//! Losses are counted per item against the better method.
//!
//! With `V(X, n)` the risk-to-go summed over all histories of `n` method-2
//! plays with `X` successes, the known arm is absorbing and
//!
//! ```text
//! V1(X, n) = (N − n)·g̃1(X, n)
//! V2(X, n) = g̃2(X, n) + V(X, n+1)·(n+1−X)/(n+1) + V(X+1, n+1)·(X+1)/(n+1)
//! ```
//!
//! where `g̃ℓ` are the prior-weighted binomial probabilities times the
//! per-item loss of the wrong method. The Bayesian risk is
//! `n0·Σ_{p2<p}(p − p2)·q + Σ_X V(X, n0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITEMS: usize = 5000;
pub const MAX_BRUTE_FORCE_ITEMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliAtom {
    pub p2: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliModel {
    pub p: f64,
    pub prior: Vec<BernoulliAtom>,
    pub n: usize,
    pub n0: usize,
}

impl BernoulliModel {
    pub fn new(p: f64, prior: Vec<BernoulliAtom>, n: usize, n0: usize) -> Result<Self> {
        let m = Self { p, prior, n, n0 };
        m.validate()?;
        Ok(m)
    }

    /// Model with `n0 = ⌈√N⌉`.
    pub fn with_default_n0(p: f64, prior: Vec<BernoulliAtom>, n: usize) -> Result<Self> {
        Self::new(p, prior, n, default_n0(n))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParams(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if self.prior.is_empty() {
            return Err(Error::InvalidPrior("prior has no atoms".into()));
        }
        for a in &self.prior {
            if !(a.p2 > 0.0 && a.p2 < 1.0) {
                return Err(Error::InvalidPrior(format!("p2 must lie in (0, 1), got {}", a.p2)));
            }
            if !(a.q.is_finite() && a.q >= 0.0) {
                return Err(Error::InvalidPrior(format!("mass must be non-negative, got {}", a.q)));
            }
        }
        let total: f64 = self.prior.iter().map(|a| a.q).sum();
        if (total - 1.0).abs() > crate::model::MASS_TOLERANCE {
            return Err(Error::InvalidPrior(format!("masses sum to {total}, expected 1")));
        }
        if self.n0 == 0 || self.n0 > self.n {
            return Err(Error::InvalidParams(format!(
                "forced plays must satisfy 1 <= n0 <= N, got n0 = {} and N = {}",
                self.n0, self.n
            )));
        }
        Ok(())
    }

    /// `D = p(1 − p)`.
    pub fn variance(&self) -> f64 {
        self.p * (1.0 - self.p)
    }

    /// Loss of the forced prefix, `n0·Σ_{p2<p}(p − p2)·q`.
    pub fn forced_loss(&self) -> f64 {
        self.n0 as f64 * self.prior.iter().map(|a| (self.p - a.p2).max(0.0) * a.q).sum::<f64>()
    }

    /// Prior obtained by mapping Gaussian scaled means `w` to
    /// `p2 = p + w·√(D/N)` with `D = p(1 − p)`.
    pub fn mapped_prior(p: f64, atoms: &[crate::model::Atom], n: usize) -> Result<Vec<BernoulliAtom>> {
        let scale = (p * (1.0 - p) / n as f64).sqrt();
        let prior: Vec<BernoulliAtom> = atoms.iter().map(|a| BernoulliAtom { p2: p + a.w * scale, q: a.p }).collect();
        if let Some(a) = prior.iter().find(|a| !(a.p2 > 0.0 && a.p2 < 1.0)) {
            return Err(Error::InvalidPrior(format!("mapped success probability {} leaves (0, 1)", a.p2)));
        }
        Ok(prior)
    }
}

pub fn default_n0(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

/// `ln k!` for `k = 0..=n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliRisk {
    pub risk: f64,
    /// `risk / √(D·N)`.
    pub scaled_risk: f64,
    pub forced_loss: f64,
    /// `Σ_X V(X, n0)`.
    pub adaptive_loss: f64,
}

pub fn solve_bernoulli_dp(model: &BernoulliModel) -> Result<BernoulliRisk> {
    solve_bernoulli_dp_capped(model, DEFAULT_MAX_ITEMS)
}

pub fn solve_bernoulli_dp_capped(model: &BernoulliModel, max_items: usize) -> Result<BernoulliRisk> {
    model.validate()?;
    let n_total = model.n;
    if n_total > max_items {
        return Err(Error::TooLarge(format!("N = {n_total} exceeds the exact-table cap {max_items}")));
    }
    let lf = log_factorials(n_total);
    let p = model.p;
    let atoms: Vec<(f64, f64, f64, f64, f64)> = model
        .prior
        .iter()
        .filter(|a| a.q > 0.0)
        .map(|a| (a.q.ln(), a.p2.ln(), (1.0 - a.p2).ln(), (a.p2 - p).max(0.0), (p - a.p2).max(0.0)))
        .collect();

    let mut next = vec![0.0; n_total + 1];
    let mut cur = vec![0.0; n_total + 1];
    for n in (model.n0..n_total).rev() {
        let remaining = (n_total - n) as f64;
        let inv = 1.0 / (n as f64 + 1.0);
        for x in 0..=n {
            let log_binom = lf[n] - lf[x] - lf[n - x];
            let (mut g1, mut g2) = (0.0, 0.0);
            for &(lq, ls, lf_, gap1, gap2) in &atoms {
                let w = (lq + log_binom + x as f64 * ls + (n - x) as f64 * lf_).exp();
                g1 += w * gap1;
                g2 += w * gap2;
            }
            let v1 = remaining * g1;
            let v2 = g2 + next[x] * (n + 1 - x) as f64 * inv + next[x + 1] * (x + 1) as f64 * inv;
            cur[x] = v1.min(v2);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let adaptive: f64 = if model.n0 == n_total { 0.0 } else { next[..=model.n0].iter().sum() };
    let forced = model.forced_loss();
    let risk = forced + adaptive;
    Ok(BernoulliRisk {
        risk,
        scaled_risk: risk / (model.variance() * n_total as f64).sqrt(),
        forced_loss: forced,
        adaptive_loss: adaptive,
    })
}

/// Bayesian risk by backward induction over the full tree of histories, with
/// both methods allowed at every unforced step. Each subtree is minimized
/// independently, which equals the minimum over all deterministic
/// history-dependent strategies.
pub fn brute_force_bernoulli(model: &BernoulliModel) -> Result<f64> {
    model.validate()?;
    if model.n > MAX_BRUTE_FORCE_ITEMS {
        return Err(Error::TooLarge(format!(
            "brute force handles N <= {MAX_BRUTE_FORCE_ITEMS}, got {}",
            model.n
        )));
    }
    let weights: Vec<f64> = model.prior.iter().map(|a| a.q).collect();
    Ok(history_value(model, 0, &weights))
}

/// `weights[j]` is the prior mass of atom `j` times the probability of the
/// history so far under it.
fn history_value(model: &BernoulliModel, depth: usize, weights: &[f64]) -> f64 {
    if depth == model.n {
        return 0.0;
    }
    let p = model.p;
    let mut best = f64::INFINITY;
    let methods: &[u8] = if depth < model.n0 { &[2] } else { &[1, 2] };
    for &method in methods {
        let mut value = 0.0;
        let mut win = Vec::with_capacity(weights.len());
        let mut lose = Vec::with_capacity(weights.len());
        for (a, &w) in model.prior.iter().zip(weights) {
            let (regret, success) = if method == 1 { ((a.p2 - p).max(0.0), p) } else { ((p - a.p2).max(0.0), a.p2) };
            value += w * regret;
            win.push(w * success);
            lose.push(w * (1.0 - success));
        }
        value += history_value(model, depth + 1, &win) + history_value(model, depth + 1, &lose);
        best = best.min(value);
    }
    best
}
