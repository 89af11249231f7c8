//! Uniform space grid and trapezoid-rule Gaussian convolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel truncation in standard deviations.
pub const KERNEL_SIGMAS: f64 = 6.0;

/// Symmetric uniform grid `{-n·h, …, 0, …, n·h}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    step: f64,
    half_nodes: usize,
}

impl XGrid {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width.is_finite() && step.is_finite() && half_width > 0.0 && step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "quadrature grid needs positive half width and step, got {half_width} and {step}"
            )));
        }
        let half_nodes = (half_width / step).round() as usize;
        if half_nodes == 0 {
            return Err(Error::InvalidGrid("quadrature step exceeds the half width".into()));
        }
        Ok(Self { step, half_nodes })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half_nodes as f64 * self.step
    }

    pub fn len(&self) -> usize {
        2 * self.half_nodes + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `x = 0`.
    pub fn origin(&self) -> usize {
        self.half_nodes
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.half_nodes as f64) * self.step
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Grid with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { step: self.step * factor, half_nodes: self.half_nodes }
    }

    /// Linear interpolation of node values at `x`, zero outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let pos = x / self.step + self.half_nodes as f64;
        if !(pos >= 0.0 && pos <= (self.len() - 1) as f64) {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.len() - 2);
        let frac = pos - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }
}

/// Trapezoid weights of the centred Gaussian density with variance
/// `variance` on `[-6σ, 6σ]` sampled at the grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    weights: Vec<f64>,
    half_taps: usize,
}

impl GaussianKernel {
    pub fn new(variance: f64, grid: &XGrid) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidArgument(format!("kernel variance must be positive, got {variance}")));
        }
        let sigma = variance.sqrt();
        let reach = KERNEL_SIGMAS * sigma;
        if reach >= grid.half_width() {
            return Err(Error::QuadratureTooNarrow(format!(
                "kernel support ±{reach:.4} does not fit in the grid half width {:.4}",
                grid.half_width()
            )));
        }
        let h = grid.step();
        let half_taps = (reach / h).floor() as usize;
        if half_taps < 3 {
            return Err(Error::InvalidGrid(format!(
                "quadrature step {h} resolves the kernel (sigma = {sigma:.4}) with fewer than 7 nodes"
            )));
        }
        let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
        let mut weights: Vec<f64> = (0..=2 * half_taps)
            .map(|k| {
                let y = (k as f64 - half_taps as f64) * h;
                norm * (-0.5 * y * y / variance).exp() * h
            })
            .collect();
        weights[0] *= 0.5;
        weights[2 * half_taps] *= 0.5;
        Ok(Self { weights, half_taps })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_taps(&self) -> usize {
        self.half_taps
    }

    /// `out[i] = Σ_k w_k · input[i + k]`, with `input` taken as zero off the grid.
    pub fn convolve(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        let m = self.half_taps as isize;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let lo = (-m).max(-(i as isize));
            let hi = m.min((n - 1 - i) as isize);
            let mut acc = 0.0;
            for k in lo..=hi {
                acc += self.weights[(k + m) as usize] * input[(i as isize + k) as usize];
            }
            *o = acc;
        }
    }

    /// Convolution evaluated at a single node.
    pub fn convolve_at(&self, input: &[f64], i: usize) -> f64 {
        let n = input.len() as isize;
        let m = self.half_taps as isize;
        let i = i as isize;
        (-m..=m)
            .filter(|k| (0..n).contains(&(i + k)))
            .map(|k| self.weights[(k + m) as usize] * input[(i + k) as usize])
            .sum()
    }
}
