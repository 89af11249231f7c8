//! Minimax control of the Gaussian one-armed bandit under batch processing.
//!
//! The minimax risk is computed as the Bayesian risk of a worst-case prior on
//! the scaled mean of the unknown arm. Bayesian risks come from either the
//! limiting free-boundary equation ([`pde`]) or the exact batch recursion
//! ([`batchdp`]); [`worstprior`] searches the two-point prior family, and
//! [`losses`], [`bernoulli`] and [`mcsim`] evaluate the resulting strategy.

pub mod batchdp;
pub mod bernoulli;
pub mod error;
pub mod losses;
pub mod mcsim;
pub mod model;
pub mod optim;
pub mod pde;
pub mod quadrature;
pub mod registry;
pub mod schedule;
pub mod strategy;
pub mod worstprior;

pub use error::{Error, Result};
pub use model::{Atom, GPair, ModelConfig, ModelParams, PriorSpec};
pub use pde::{GridSpec, RiskField};
pub use strategy::{Action, FixedPolicy, Policy, ThresholdStrategy};
