//! Batch schedules: horizon fractions for the recursions, item counts for
//! simulation.
//!
//! Fraction schedules are written either as a single batch count (`"50"`,
//! fifty equal batches) or as comma-separated `COUNTxFRACTION` groups, with
//! fractions given as `a/b` or as decimals: `"8x1/200,48x1/50"`. Item
//! schedules use `COUNTxSIZE` groups: `"8x25,48x100"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEDULE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    fractions: Vec<f64>,
}

impl BatchSchedule {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no batches".into()));
        }
        if let Some(f) = fractions.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::InvalidSchedule(format!("batch fraction {f} is not positive")));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > SCHEDULE_TOLERANCE {
            return Err(Error::InvalidSchedule(format!("fractions sum to {total}, expected 1")));
        }
        Ok(Self { fractions })
    }

    pub fn uniform(batches: usize) -> Result<Self> {
        if batches == 0 {
            return Err(Error::InvalidSchedule("need at least one batch".into()));
        }
        Self::new(vec![1.0 / batches as f64; batches])
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    /// Start time of each stage plus the terminal time 1.
    pub fn stage_times(&self) -> Vec<f64> {
        let mut times = Vec::with_capacity(self.fractions.len() + 1);
        let mut acc = 0.0;
        times.push(0.0);
        for f in &self.fractions[..self.fractions.len() - 1] {
            acc += f;
            times.push(acc);
        }
        times.push(1.0);
        times
    }

    pub fn is_uniform(&self) -> bool {
        self.fractions.windows(2).all(|w| w[0] == w[1])
    }
}

fn parse_fraction(s: &str) -> Result<f64> {
    let bad = || Error::InvalidSchedule(format!("cannot parse fraction {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn parse_groups<T>(s: &str, mut item: impl FnMut(&str) -> Result<T>) -> Result<Vec<(usize, T)>> {
    s.split(',')
        .map(|group| {
            let group = group.trim();
            let (count, rest) = group
                .split_once(['x', 'X'])
                .ok_or_else(|| Error::InvalidSchedule(format!("expected COUNTxVALUE, got {group:?}")))?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSchedule(format!("bad batch count in {group:?}")))?;
            if count == 0 {
                return Err(Error::InvalidSchedule(format!("zero batch count in {group:?}")));
            }
            Ok((count, item(rest)?))
        })
        .collect()
}

impl FromStr for BatchSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(k) = s.parse::<usize>() {
            return Self::uniform(k);
        }
        let mut fractions = Vec::new();
        for (count, f) in parse_groups(s, parse_fraction)? {
            fractions.extend(std::iter::repeat_n(f, count));
        }
        Self::new(fractions)
    }
}

/// Batch sizes in items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSchedule {
    sizes: Vec<usize>,
}

impl ItemSchedule {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidSchedule("item schedule needs non-empty positive batches".into()));
        }
        Ok(Self { sizes })
    }

    pub fn uniform(batches: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; batches])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn to_fractions(&self) -> Result<BatchSchedule> {
        let total = self.total() as f64;
        BatchSchedule::new(self.sizes.iter().map(|&m| m as f64 / total).collect())
    }
}

impl FromStr for ItemSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sizes = Vec::new();
        for (count, size) in parse_groups(s.trim(), |v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidSchedule(format!("bad batch size {v:?}")))
        })? {
            sizes.extend(std::iter::repeat_n(size, count));
        }
        Self::new(sizes)
    }
}

impl fmt::Display for ItemSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for &s in &self.sizes {
            match groups.last_mut() {
                Some((n, size)) if *size == s => *n += 1,
                _ => groups.push((1, s)),
            }
        }
        let parts: Vec<String> = groups.iter().map(|(n, s)| format!("{n}x{s}")).collect();
        write!(f, "{}", parts.join(","))
    }
}
