//! Forward Laplace transforms by quadrature and inversion along a Talbot contour.

use crate::mlf::{ml_eval, MLParams, MLPoint, MlError};
use crate::quad::{integrate, QuadError, QuadOptions};
use crate::special::factorial;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaplaceError {
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("tail e^(-Re(s) T) sup|f| = {estimate:e} exceeds tolerance {tol:e}")]
    TailNotNegligible { estimate: f64, tol: f64 },
    #[error("Talbot summand overflowed at node {node} (t = {t})")]
    ContourFailure { node: usize, t: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Paired samples (s, F(s)) of a transform, Re(s) > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSample {
    pub s_values: Vec<Complex64>,
    pub f_hat: Vec<Complex64>,
}

impl TransformSample {
    pub fn new(s_values: Vec<Complex64>, f_hat: Vec<Complex64>) -> Result<Self, LaplaceError> {
        if s_values.len() != f_hat.len() {
            return Err(LaplaceError::InvalidInput(format!(
                "{} nodes but {} values",
                s_values.len(),
                f_hat.len()
            )));
        }
        if let Some(s) = s_values.iter().find(|s| !(s.re > 0.0)) {
            return Err(LaplaceError::InvalidInput(format!(
                "node {s} is not in Re(s) > 0"
            )));
        }
        Ok(Self { s_values, f_hat })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    /// Declared endpoint behaviour f(t) ~ t^σ near 0; σ < 0 triggers the graded mesh.
    pub endpoint_exponent: f64,
    pub tol: f64,
    pub panels: usize,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            endpoint_exponent: 0.0,
            tol: 1e-12,
            panels: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    pub value: Complex64,
    pub abs_error: f64,
}

/// ∫₀ᵀ e^{−st} f(t) dt.
pub fn forward_laplace(
    f: &dyn Fn(f64) -> f64,
    s: Complex64,
    t_max: f64,
    opts: &ForwardOptions,
) -> Result<LaplaceValue, LaplaceError> {
    if !(s.re > 0.0) {
        return Err(LaplaceError::InvalidInput(format!(
            "Re(s) = {} must be positive",
            s.re
        )));
    }
    if !(t_max > 0.0) {
        return Err(LaplaceError::InvalidInput(format!(
            "T = {t_max} must be positive"
        )));
    }
    let sigma = opts.endpoint_exponent;
    if !(sigma > -1.0) {
        return Err(LaplaceError::InvalidInput(format!(
            "endpoint exponent {sigma} must exceed -1"
        )));
    }

    let sup_tail = (0..=32)
        .map(|i| f(t_max * (0.5 + 0.5 * i as f64 / 32.0)).abs())
        .fold(0.0, f64::max);
    let tail = (-s.re * t_max).exp() * sup_tail;
    if tail > opts.tol {
        return Err(LaplaceError::TailNotNegligible {
            estimate: tail,
            tol: opts.tol,
        });
    }

    let k = opts.panels.max(1);
    let grade = if sigma < 0.0 {
        1.0 / (1.0 + sigma)
    } else {
        1.0
    };
    let node = |i: usize| t_max * (i as f64 / k as f64).powf(grade);
    let qopts = QuadOptions {
        rel_tol: 0.1 * opts.tol,
        initial_panels: 2,
        ..Default::default()
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_error = tail;
    for i in 0..k {
        let (a, b) = (node(i), node(i + 1));
        let est = if i == 0 && sigma < 0.0 {
            // t = b u^{1/(1+σ)} turns t^σ dt into a bounded integrand.
            let q = 1.0 / (1.0 + sigma);
            integrate(
                |u: f64| {
                    let t = b * u.powf(q);
                    let jac = b * q * u.powf(q - 1.0);
                    let v = if u == 0.0 { 0.0 } else { f(t) * jac };
                    (-s * t).exp() * v
                },
                0.0,
                1.0,
                &qopts,
            )?
        } else {
            integrate(|t: f64| (-s * t).exp() * f(t), a, b, &qopts)?
        };
        value += est.value;
        abs_error += est.abs_error;
    }
    Ok(LaplaceValue { value, abs_error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalbotConfig {
    pub node_count: usize,
    /// Contour scale σ = N / (time_scale · t).
    pub time_scale: f64,
}

impl Default for TalbotConfig {
    fn default() -> Self {
        Self {
            node_count: 48,
            time_scale: 5.0,
        }
    }
}

impl TalbotConfig {
    pub fn validate(&self) -> Result<(), LaplaceError> {
        if self.node_count < 16 || !self.node_count.is_multiple_of(2) {
            return Err(LaplaceError::InvalidInput(format!(
                "node count {} must be even and at least 16",
                self.node_count
            )));
        }
        if !(self.time_scale > 0.0) {
            return Err(LaplaceError::InvalidInput(format!(
                "time scale {} must be positive",
                self.time_scale
            )));
        }
        Ok(())
    }
}

/// Midpoint rule on s(θ) = σθ(cot θ + i), θ ∈ (−π, π).
pub fn talbot_invert(
    f: &dyn Fn(Complex64) -> Complex64,
    t: f64,
    cfg: &TalbotConfig,
) -> Result<f64, LaplaceError> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(LaplaceError::InvalidInput(format!(
            "t = {t} must be positive"
        )));
    }
    let n = cfg.node_count;
    let sigma = n as f64 / (cfg.time_scale * t);
    let h = 2.0 * PI / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let theta = -PI + (k as f64 + 0.5) * h;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(sigma * theta * cot, sigma * theta);
        let ds = Complex64::new(sigma * (cot - theta / theta.sin().powi(2)), sigma);
        let term = (s * t).exp() * f(s) * ds;
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(LaplaceError::ContourFailure { node: k, t });
        }
        acc += term;
    }
    // (h / 2πi) Σ, real part.
    Ok((acc * Complex64::new(0.0, -h / (2.0 * PI))).re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub t: f64,
    pub time_side: f64,
    pub inverted: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub rows: Vec<PairRow>,
    pub max_rel_err: f64,
}

/// Checks ℒ[t^{jα+β−1}/j! E^{(j)}_{α,β}(μt^α)](s) = s^{α−β}/(s^α−μ)^{j+1} on a time grid.
pub fn verify_ml_pair(
    p: MLParams,
    mu: f64,
    j: usize,
    t_grid: &[f64],
    cfg: &TalbotConfig,
) -> Result<PairReport, LaplaceError> {
    if !(mu <= 0.0) {
        return Err(LaplaceError::InvalidInput(format!(
            "mu = {mu} must be non-positive"
        )));
    }
    let f_hat = |s: Complex64| s.powf(p.alpha - p.beta) / (s.powf(p.alpha) - mu).powi(j as i32 + 1);
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut max_rel_err: f64 = 0.0;
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(LaplaceError::InvalidInput(format!(
                "t = {t} must be positive"
            )));
        }
        let e = ml_eval(MLPoint {
            params: p,
            z: mu * t.powf(p.alpha),
            deriv_order: j,
        })?
        .value;
        let time_side = t.powf(j as f64 * p.alpha + p.beta - 1.0) / factorial(j) * e;
        let inverted = talbot_invert(&f_hat, t, cfg)?;
        let rel_err = ((inverted - time_side) / time_side).abs();
        max_rel_err = max_rel_err.max(rel_err);
        rows.push(PairRow {
            t,
            time_side,
            inverted,
            rel_err,
        });
    }
    Ok(PairReport { rows, max_rel_err })
}

/// n points spaced logarithmically on [a, b].
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
        .collect()
}
