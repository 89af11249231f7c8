//! Control strategies.
//!
//! Action 1 is the arm with known mean; once chosen it is kept until the end of
//! the control, so every strategy here is a stopping rule on the scaled income
//! statistic of the unknown arm (action 2).

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Action 1: the arm with known mean. Absorbing.
    Known,
    /// Action 2: the arm being learned.
    Unknown,
}

impl Action {
    pub fn index(self) -> u8 {
        match self {
            Action::Known => 1,
            Action::Unknown => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Action::Known),
            2 => Ok(Action::Unknown),
            other => Err(Error::InvalidArgument(format!("action must be 1 or 2, got {other}"))),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A rule deciding, at scaled income `x` and time `t`, whether to switch to the
/// known arm.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    fn action(&self, x: f64, t: f64) -> Result<Action>;
}

/// Plays one action at every state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPolicy(pub Action);

impl Policy for FixedPolicy {
    fn name(&self) -> &str {
        match self.0 {
            Action::Known => "always-known",
            Action::Unknown => "always-unknown",
        }
    }

    fn action(&self, _x: f64, _t: f64) -> Result<Action> {
        Ok(self.0)
    }
}

/// Threshold curve `T(t)`: switch to the known arm when `x < T(t)`.
///
/// Row `j` governs decisions made at times in `[t_j, t_{j+1})`; the last row
/// covers up to the end of the horizon at `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStrategy {
    t_grid: Vec<f64>,
    thresholds: Vec<f64>,
}

const TIME_SLACK: f64 = 1e-9;

impl ThresholdStrategy {
    pub fn new(t_grid: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if t_grid.is_empty() || t_grid.len() != thresholds.len() {
            return Err(Error::InvalidArgument(format!(
                "threshold strategy needs matching non-empty columns, got {} times and {} thresholds",
                t_grid.len(),
                thresholds.len()
            )));
        }
        if t_grid.iter().chain(&thresholds).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("threshold strategy has non-finite entries".into()));
        }
        if t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("threshold times must be strictly increasing".into()));
        }
        if t_grid[0] < -TIME_SLACK || *t_grid.last().unwrap() >= 1.0 {
            return Err(Error::InvalidArgument("threshold times must lie in [0, 1)".into()));
        }
        Ok(Self { t_grid, thresholds })
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    /// Threshold of the nearest row not after `t`.
    pub fn threshold_at(&self, t: f64) -> Result<f64> {
        if !(t >= self.t_grid[0] - TIME_SLACK) || !(t < 1.0 - TIME_SLACK) {
            return Err(Error::StrategyMismatch(format!(
                "time {t} is outside the strategy range [{}, 1)",
                self.t_grid[0]
            )));
        }
        let idx = self.t_grid.partition_point(|&s| s <= t + TIME_SLACK);
        Ok(self.thresholds[idx.saturating_sub(1)])
    }

    /// Same strategy with thresholds multiplied by `factor` (for the income
    /// rescaling `x -> sqrt(k) x`).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t_grid: self.t_grid.clone(),
            thresholds: self.thresholds.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "T"])?;
        for (t, thr) in self.t_grid.iter().zip(&self.thresholds) {
            w.write_record([t.to_string(), thr.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            #[serde(rename = "T")]
            threshold: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut ts = Vec::new();
        let mut thr = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            ts.push(row.t);
            thr.push(row.threshold);
        }
        Self::new(ts, thr)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

impl Policy for ThresholdStrategy {
    fn name(&self) -> &str {
        "threshold"
    }

    fn action(&self, x: f64, t: f64) -> Result<Action> {
        Ok(if x < self.threshold_at(t)? { Action::Known } else { Action::Unknown })
    }
}

/// Action rule of a backward sweep: minimize, or follow a fixed policy.
pub(crate) enum Chooser<'a> {
    Minimize,
    Follow(&'a dyn Policy),
}

impl Chooser<'_> {
    pub(crate) fn choose(&self, v1: f64, v2: f64, x: f64, t: f64) -> Result<Action> {
        match self {
            Chooser::Minimize => Ok(if v1 <= v2 { Action::Known } else { Action::Unknown }),
            Chooser::Follow(policy) => policy.action(x, t),
        }
    }
}
