//! Monte Carlo batch processing of Bernoulli incomes under a threshold strategy.
//!
//! Method 1 succeeds with probability `p`, method 2 with `p2 = p + d·√(D/T)`
//! where `D = p(1 − p)`. Before each batch the strategy sees
//! `x = (T·D)^{-1/2}·Σ(ζ − p)` over the method-2 items so far and
//! `t = items processed / T`, and switches to method 1 for good once
//! `x < T(t)`. The scaled loss of a run is `(T·max(p, p2) − Σζ)/√(D·T)`.
//!
//! Each replication draws from its own ChaCha8 stream keyed by the master
//! seed, the `d` index and the replication index, so results do not depend on
//! scheduling or thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ItemSchedule;
use crate::strategy::{Action, Policy};

pub const DEFAULT_REPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub total_items: usize,
    pub schedule: ItemSchedule,
    pub p: f64,
    pub d_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.total() != self.total_items {
            return Err(Error::InvalidSchedule(format!(
                "batches hold {} items, expected T = {}",
                self.schedule.total(),
                self.total_items
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("need at least one replication".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParams(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if self.d_grid.is_empty() {
            return Err(Error::InvalidArgument("d grid is empty".into()));
        }
        for &d in &self.d_grid {
            self.p2(d)?;
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.p * (1.0 - self.p)
    }

    /// Success probability of method 2 at scaled gap `d`.
    pub fn p2(&self, d: f64) -> Result<f64> {
        let p2 = self.p + d * (self.variance() / self.total_items as f64).sqrt();
        if !(0.0..=1.0).contains(&p2) {
            return Err(Error::InvalidArgument(format!("gap d = {d} gives p2 = {p2} outside [0, 1]")));
        }
        Ok(p2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub d: f64,
    pub mean: f64,
    /// Sample standard deviation over `√reps`.
    pub se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub points: Vec<SimPoint>,
}

impl SimResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d", "mean", "se", "reps"])?;
        for p in &self.points {
            w.write_record([p.d.to_string(), p.mean.to_string(), p.se.to_string(), p.reps.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scaled loss of each run from its total income `Σζ`.
pub fn loss_estimator(incomes: &[f64], config: &SimConfig, d: f64) -> Result<Vec<f64>> {
    let p2 = config.p2(d)?;
    let t = config.total_items as f64;
    let scale = 1.0 / (config.variance() * t).sqrt();
    let best = t * config.p.max(p2);
    Ok(incomes.iter().map(|&s| (best - s) * scale).collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn replication_rng(seed: u64, d_index: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(d_index as u64)));
    rng.set_stream(rep as u64);
    rng
}

fn draw<R: Rng>(rng: &mut R, m: usize, prob: f64) -> Result<u64> {
    let b = Binomial::new(m as u64, prob).map_err(|e| Error::InvalidArgument(format!("binomial({m}, {prob}): {e}")))?;
    Ok(b.sample(rng))
}

/// Total income of one run.
fn run_once<R: Rng>(config: &SimConfig, policy: &dyn Policy, p2: f64, rng: &mut R) -> Result<f64> {
    let t_items = config.total_items as f64;
    let norm = 1.0 / (t_items * config.variance()).sqrt();
    let mut items = 0usize;
    let mut centred = 0.0;
    let mut income = 0u64;
    let mut switched = false;
    for &m in config.schedule.sizes() {
        if !switched {
            let t = items as f64 / t_items;
            switched = policy.action(centred * norm, t)? == Action::Known;
        }
        if switched {
            income += draw(rng, m, config.p)?;
        } else {
            let s = draw(rng, m, p2)?;
            income += s;
            centred += s as f64 - m as f64 * config.p;
        }
        items += m;
    }
    Ok(income as f64)
}

/// Scaled losses of every replication at `config.d_grid[d_index]`.
pub fn simulate_samples(config: &SimConfig, policy: &dyn Policy, d_index: usize) -> Result<Vec<f64>> {
    config.validate()?;
    let d = *config
        .d_grid
        .get(d_index)
        .ok_or_else(|| Error::InvalidArgument(format!("d index {d_index} out of range")))?;
    let p2 = config.p2(d)?;
    let mut t = 0.0;
    for &m in config.schedule.sizes() {
        policy.action(0.0, t / config.total_items as f64)?;
        t += m as f64;
    }
    let incomes = (0..config.reps)
        .into_par_iter()
        .map(|rep| run_once(config, policy, p2, &mut replication_rng(config.seed, d_index, rep)))
        .collect::<Result<Vec<f64>>>()?;
    loss_estimator(&incomes, config, d)
}

fn summarize(d: f64, samples: &[f64]) -> SimPoint {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let se = if samples.len() > 1 {
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    SimPoint { d, mean, se, reps: samples.len() }
}

pub fn simulate(config: &SimConfig, policy: &dyn Policy) -> Result<SimResult> {
    config.validate()?;
    let points = (0..config.d_grid.len())
        .map(|i| Ok(summarize(config.d_grid[i], &simulate_samples(config, policy, i)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult { points })
}
