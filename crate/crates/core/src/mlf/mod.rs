//! Mittag-Leffler functions E_{α,β}(z) = Σ z^k / Γ(αk+β) and their z-derivatives on the real line.

mod integral;
mod series;

pub use integral::{ml_integral, MAX_DERIV as INTEGRAL_MAX_DERIV};
pub use series::ml_series;

use crate::quad::QuadError;
use crate::special::{binomial, cospi, factorial, rgamma, sinpi};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series did not meet its tail criterion within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MlError> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MlError> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(MlError::InvalidParams(format!(
                "alpha = {} must be positive",
                self.alpha
            )));
        }
        if !self.beta.is_finite() {
            return Err(MlError::InvalidParams(format!(
                "beta = {} must be finite",
                self.beta
            )));
        }
        Ok(())
    }

    /// The integral form needs 0 < α < 1 and β < 1 + α.
    pub fn validate_integral(&self) -> Result<(), MlError> {
        self.validate()?;
        if !(self.alpha < 1.0) {
            return Err(MlError::InvalidParams(format!(
                "alpha = {} outside (0,1)",
                self.alpha
            )));
        }
        if !(self.beta < 1.0 + self.alpha) {
            return Err(MlError::InvalidParams(format!(
                "beta = {} must be below 1 + alpha = {}",
                self.beta,
                1.0 + self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLPoint {
    pub params: MLParams,
    pub z: f64,
    pub deriv_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Series,
    Integral,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Series => "series",
            Branch::Integral => "integral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLResult {
    pub value: f64,
    pub est_rel_error: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlConfig {
    /// |z| at or below which the series is used.
    pub z_switch: f64,
    /// For z < 0 and 0 < α < 1 the series is also abandoned once |z|^{1/α} exceeds
    /// this; its terms peak near k ≈ |z|^{1/α}/α and cancel catastrophically.
    pub series_reach: f64,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            z_switch: 5.0,
            series_reach: 10.0,
        }
    }
}

/// ψ_{α,β}(ω) = [ω^{2α−β} sin(πβ) + ω^{α−β} sin(π(β−α))] / [ω^{2α} + 2ω^α cos(πα) + 1],
/// so that E_{α,β}(z) = ((−z)^{(1−β)/α}/π) ∫₀^∞ e^{−ω(−z)^{1/α}} ψ_{α,β}(ω) dω for z < 0.
pub fn psi_kernel(p: MLParams, omega: f64) -> Result<f64, MlError> {
    p.validate_integral()?;
    if !(omega >= 0.0) {
        return Err(MlError::InvalidArgument(format!(
            "omega = {omega} must be non-negative"
        )));
    }
    let (a, b) = (p.alpha, p.beta);
    let s1 = sinpi(b);
    let s2 = sinpi(b - a);
    let t1 = if s1 == 0.0 {
        0.0
    } else {
        omega.powf(2.0 * a - b) * s1
    };
    let t2 = if s2 == 0.0 {
        0.0
    } else {
        omega.powf(a - b) * s2
    };
    let wa = omega.powf(a);
    Ok((t1 + t2) / (wa * wa + 2.0 * wa * cospi(a) + 1.0))
}

/// Envelope |z|^{−(β−1)₊/α − k} (1+|z|)^{−c+(β−1)₊/α}, c = 2 when α = β and 1 otherwise.
pub fn ml_decay_bound(p: MLParams, k: usize, z: f64) -> Result<f64, MlError> {
    p.validate_integral()?;
    if !(z < 0.0) {
        return Err(MlError::InvalidArgument(format!(
            "z = {z} must be negative"
        )));
    }
    let x = -z;
    let e = (p.beta - 1.0).max(0.0) / p.alpha;
    let c = if p.alpha == p.beta { 2.0 } else { 1.0 };
    Ok(x.powf(-e - k as f64) * (1.0 + x).powf(-c + e))
}

pub fn ml_eval(pt: MLPoint) -> Result<MLResult, MlError> {
    ml_eval_with(&MlConfig::default(), pt)
}

pub fn ml_eval_with(cfg: &MlConfig, pt: MLPoint) -> Result<MLResult, MlError> {
    let MLPoint {
        params: p,
        z,
        deriv_order: j,
    } = pt;
    p.validate()?;
    if !z.is_finite() {
        return Err(MlError::InvalidArgument(format!("z = {z} is not finite")));
    }
    let in_unit = p.alpha < 1.0;
    let series_ok = !(z < 0.0 && in_unit && j <= INTEGRAL_MAX_DERIV)
        || (-z).powf(1.0 / p.alpha) <= cfg.series_reach;
    if z.abs() <= cfg.z_switch && series_ok {
        return ml_series(p, z, j);
    }
    if z > 0.0 {
        return Err(MlError::Unsupported(format!(
            "z = {z} > {} lies in the growth region",
            cfg.z_switch
        )));
    }
    if !in_unit {
        return ml_series(p, z, j);
    }
    if p.beta < 1.0 + p.alpha {
        return ml_integral(p, z, j);
    }
    reduce_beta(cfg, p, z, j)
}

/// E_{α,β}(z) = (E_{α,β−α}(z) − 1/Γ(β−α)) / z, differentiated with the Leibniz rule.
fn reduce_beta(cfg: &MlConfig, p: MLParams, z: f64, j: usize) -> Result<MLResult, MlError> {
    let lower = MLParams {
        alpha: p.alpha,
        beta: p.beta - p.alpha,
    };
    let mut value = 0.0;
    let mut magnitude = 0.0;
    let mut err = 0.0;
    for i in 0..=j {
        let inner = ml_eval_with(
            cfg,
            MLPoint {
                params: lower,
                z,
                deriv_order: j - i,
            },
        )?;
        let h = if i == j {
            inner.value - rgamma(lower.beta)
        } else {
            inner.value
        };
        let inv = sign(i) * factorial(i) * z.powi(-(i as i32) - 1);
        let term = binomial(j, i) * h * inv;
        value += term;
        magnitude += term.abs();
        err += term.abs()
            * inner.est_rel_error
            * (inner.value.abs() / h.abs().max(f64::MIN_POSITIVE)).max(1.0);
    }
    let est_rel_error = if value == 0.0 {
        0.0
    } else {
        (err + 4.0 * f64::EPSILON * magnitude) / value.abs()
    };
    Ok(MLResult {
        value,
        est_rel_error,
        branch: Branch::Integral,
    })
}

fn sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Shorthand for E^{(j)}_{α,β}(z) through the dispatcher.
pub fn ml(alpha: f64, beta: f64, z: f64, j: usize) -> Result<f64, MlError> {
    let params = MLParams::new(alpha, beta)?;
    ml_eval(MLPoint {
        params,
        z,
        deriv_order: j,
    })
    .map(|r| r.value)
}
