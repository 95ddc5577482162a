//! Integral representation on the negative real axis, 0 < α < 1, β < 1 + α:
//!
//! E_{α,β}(z) = 1/(απ) ∫₀^∞ τ^{(1−β)/α} e^{−τ^{1/α}} Im[e^{iπβ} / (τ − z e^{iπα})] dτ.
//!
//! Differentiating the rational factor j times gives
//! j! Σ_k C(j+1,k) τ^k (−z)^{j+1−k} sin(π(β+(k−1)α)) / |τ − z e^{iπα}|^{2(j+1)},
//! whose numerator has no cancellation for −z > 0. The endpoint power τ^{(1−β)/α}
//! is absorbed by τ = u^{α/(α+1−β)}.

use super::{Branch, MLParams, MLResult, MlError};
use crate::quad::{integrate, QuadOptions};
use crate::special::{binomial, cospi, factorial, sinpi};
use std::f64::consts::PI;

pub const MAX_DERIV: usize = 4;
const TAIL_REL: f64 = 1e-16;

struct Kernel {
    j: usize,
    x: f64,
    cos_pa: f64,
    coeffs: Vec<f64>,
}

impl Kernel {
    fn new(p: MLParams, x: f64, j: usize) -> Self {
        let coeffs = (0..=j + 1)
            .map(|k| binomial(j + 1, k) * sinpi(p.beta + (k as f64 - 1.0) * p.alpha))
            .collect();
        Self {
            j,
            x,
            cos_pa: cospi(p.alpha),
            coeffs,
        }
    }

    /// j-th z-derivative of the rational factor, evaluated in the scaled variable ρ = τ/x.
    fn eval(&self, tau: f64) -> f64 {
        let rho = tau / self.x;
        let mut num = 0.0;
        let mut rk = 1.0;
        for c in &self.coeffs {
            num += c * rk;
            rk *= rho;
        }
        let den = rho * rho + 2.0 * rho * self.cos_pa + 1.0;
        let scale = self.x.powi(self.j as i32 + 1);
        factorial(self.j) * num / (den.powi(self.j as i32 + 1) * scale)
    }
}

/// Upper bound for Γ(a, X) valid for X > 2 max(a − 1, 0).
fn upper_gamma_bound(a: f64, big_x: f64) -> f64 {
    let lead = big_x.powf(a - 1.0) * (-big_x).exp();
    if a <= 1.0 {
        lead
    } else {
        lead / (1.0 - (a - 1.0) / big_x)
    }
}

pub fn ml_integral(p: MLParams, z: f64, j: usize) -> Result<MLResult, MlError> {
    p.validate_integral()?;
    if !(z < 0.0) || !z.is_finite() {
        return Err(MlError::InvalidArgument(format!(
            "integral form needs finite z < 0, got {z}"
        )));
    }
    if j > MAX_DERIV {
        return Err(MlError::Unsupported(format!(
            "derivative order {j} > {MAX_DERIV} on the integral branch"
        )));
    }
    let (alpha, beta) = (p.alpha, p.beta);
    let x = -z;
    let kernel = Kernel::new(p, x, j);
    // τ^{(1−β)/α} dτ = du / (1 + (1−β)/α) under τ = u^q.
    let a_exp = alpha + 1.0 - beta;
    let q = alpha / a_exp;
    let jac = alpha / a_exp;
    let integrand = |u: f64| {
        let tau = u.powf(q);
        (-tau.powf(1.0 / alpha)).exp() * kernel.eval(tau)
    };
    // u-coordinate of τ^{1/α} = X.
    let u_of = |big_x: f64| big_x.powf(a_exp);

    // Where the integrand has its bulk: below the decay scale or near the pole at |z|.
    let opts = QuadOptions {
        rel_tol: 1e-13,
        initial_panels: 8,
        ..Default::default()
    };
    let mut big_x = 40.0_f64.max(2.0 * a_exp + 2.0);
    let mut breaks = vec![0.0];
    let pole_u = x.powf(a_exp / alpha);
    if pole_u < u_of(big_x) {
        breaks.push(pole_u);
    }
    breaks.push(u_of(big_x));

    let mut total = 0.0;
    let mut abs_err = 0.0;
    for w in breaks.windows(2) {
        let est = integrate(integrand, w[0], w[1], &opts).map_err(MlError::Quadrature)?;
        total += est.value;
        abs_err += est.abs_error;
    }
    let mut tail = tail_bound(alpha, a_exp, big_x, j);
    while tail > TAIL_REL * total.abs() && big_x < 2000.0 {
        let next = big_x * 1.5;
        let est =
            integrate(integrand, u_of(big_x), u_of(next), &opts).map_err(MlError::Quadrature)?;
        total += est.value;
        abs_err += est.abs_error;
        big_x = next;
        tail = tail_bound(alpha, a_exp, big_x, j);
    }

    let pref = jac / (alpha * PI);
    let value = pref * total;
    let est_rel_error = if total == 0.0 {
        0.0
    } else {
        (abs_err + tail) / total.abs()
    };
    Ok(MLResult {
        value,
        est_rel_error,
        branch: Branch::Integral,
    })
}

/// Bound on the discarded part ∫_{τ*}^∞, in units of the bracketed integral.
fn tail_bound(alpha: f64, a_exp: f64, big_x: f64, j: usize) -> f64 {
    let tau_star = big_x.powf(alpha);
    let sin_pa = if alpha <= 0.5 { 1.0 } else { sinpi(alpha) };
    let rational = factorial(j) / (tau_star * sin_pa).powi(j as i32 + 1);
    // ∫ τ^{(1−β)/α} e^{−τ^{1/α}} dτ over τ > τ* equals α Γ(α+1−β, X); divide by the Jacobian α/(α+1−β).
    rational * a_exp * upper_gamma_bound(a_exp, big_x)
}
