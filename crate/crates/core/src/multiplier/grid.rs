//! Periodic grids on [−L, L)^d and their discrete Fourier transform.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Nodes x_m = −L + 2Lm/n and frequencies ξ_k = πk/L, k ∈ [−n/2, n/2), per axis.
///
/// Flat indices are row-major; spectra are stored in FFT order, so index i on
/// an axis carries k = i for i < n/2 and k = i − n otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Invalid(format!(
                "dimension {dim} not in {{1, 2}}"
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(GridError::Invalid(format!(
                "n = {n} must be a power of two ≥ 2"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(GridError::Invalid(format!(
                "half width {half_width} must be positive"
            )));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn line(n: usize, half_width: f64) -> Result<Self, GridError> {
        Self::new(1, n, half_width)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn freq(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(i) as f64 / self.half_width
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    fn split(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    /// Coordinates of the flat node index, one per axis.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let ix = self.split(flat);
        ix[..self.dim].iter().map(|&i| self.node(i)).collect()
    }

    /// Frequency vector of the flat spectral index.
    pub fn freq_point(&self, flat: usize) -> Vec<f64> {
        let ix = self.split(flat);
        ix[..self.dim].iter().map(|&i| self.freq(i)).collect()
    }

    /// Quadrature weight of one node, (2L/n)^d.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn check_len(&self, got: usize) -> Result<(), GridError> {
        if got != self.len() {
            return Err(GridError::ShapeMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Forward and inverse transforms û_k = Σ_m u_m e^{−i x_m·ξ_k}, u_m = n^{−d} Σ_k û_k e^{i x_m·ξ_k}.
#[derive(Clone)]
pub struct Transform {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.grid.check_len(u.len())?;
        let mut buf = u.to_vec();
        self.apply(&mut buf, &*self.fwd);
        // e^{iLξ_k} = (−1)^k on each axis
        self.alternate(&mut buf);
        Ok(buf)
    }

    pub fn inverse(&self, spec: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.grid.check_len(spec.len())?;
        let mut buf = spec.to_vec();
        self.alternate(&mut buf);
        self.apply(&mut buf, &*self.inv);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(buf)
    }

    fn alternate(&self, buf: &mut [Complex64]) {
        for (flat, v) in buf.iter_mut().enumerate() {
            let ix = self.grid.split(flat);
            if (ix[0] + ix[1]) % 2 == 1 {
                *v = -*v;
            }
        }
    }

    fn apply(&self, buf: &mut [Complex64], plan: &dyn Fft<f64>) {
        let n = self.grid.n;
        plan.process(buf);
        if self.grid.dim == 2 {
            transpose(buf, n);
            plan.process(buf);
            transpose(buf, n);
        }
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}
