//! L1 discretisation of the Caputo derivative and implicit time stepping for
//! scalar problems ∂ₜʳy + λy = g, y(0) = y₀.

use crate::mlf::{ml, MlError};
use crate::special::{gamma, rgamma};
use std::sync::Arc;
use thiserror::Error;

pub const MAX_STEPS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaputoError {
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no closed-form solution for a non-constant source")]
    NoClosedForm,
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Uniform grid t_n = nτ, n = 0..M, with the L1 weights b_k = (k+1)^{1−r} − k^{1−r}.
#[derive(Debug, Clone, PartialEq)]
pub struct FracGrid {
    r: f64,
    t_max: f64,
    steps: usize,
    tau: f64,
    weights: Vec<f64>,
}

impl FracGrid {
    pub fn new(r: f64, t_max: f64, steps: usize) -> Result<Self, CaputoError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(CaputoError::InvalidInput(format!(
                "order r = {r} must lie in (0,1)"
            )));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(CaputoError::InvalidInput(format!(
                "t_max = {t_max} must be positive"
            )));
        }
        if !(2..=MAX_STEPS).contains(&steps) {
            return Err(CaputoError::InvalidInput(format!(
                "steps = {steps} must lie in [2, {MAX_STEPS}]"
            )));
        }
        let e = 1.0 - r;
        let weights = (0..steps)
            .map(|k| ((k + 1) as f64).powf(e) - (k as f64).powf(e))
            .collect();
        Ok(Self {
            r,
            t_max,
            steps,
            tau: t_max / steps as f64,
            weights,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_max
        } else {
            n as f64 * self.tau
        }
    }
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }

    /// τ^{−r}/Γ(2−r).
    pub fn scale(&self) -> f64 {
        self.tau.powf(-self.r) * rgamma(2.0 - self.r)
    }

    /// Σ_{k=1}^{n−1} b_k (y_{n−k} − y_{n−k−1}), the part of the L1 sum already known at step n.
    pub fn history<T>(&self, n: usize, y: &[T]) -> T
    where
        T: Copy
            + std::ops::Sub<Output = T>
            + std::ops::Mul<f64, Output = T>
            + std::ops::Add<Output = T>
            + Default,
    {
        let mut acc = T::default();
        for k in 1..n {
            acc = acc + (y[n - k] - y[n - k - 1]) * self.weights[k];
        }
        acc
    }
}

/// Discrete Caputo derivative at t_1..t_M from samples at t_0..t_M.
pub fn l1_apply(g: &FracGrid, samples: &[f64]) -> Result<Vec<f64>, CaputoError> {
    if samples.len() != g.steps + 1 {
        return Err(CaputoError::LengthMismatch {
            expected: g.steps + 1,
            got: samples.len(),
        });
    }
    let c = g.scale();
    Ok((1..=g.steps)
        .map(|n| c * (g.history(n, samples) + (samples[n] - samples[n - 1]) * g.weights[0]))
        .collect())
}

#[derive(Clone)]
pub enum Source {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Source {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Function(f) => f(t),
        }
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Constant(c) => write!(f, "Constant({c})"),
            Source::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FodeProblem {
    pub r: f64,
    pub lambda: f64,
    pub y0: f64,
    pub source: Source,
}

impl FodeProblem {
    pub fn homogeneous(r: f64, lambda: f64, y0: f64) -> Self {
        Self {
            r,
            lambda,
            y0,
            source: Source::Constant(0.0),
        }
    }

    fn validate(&self, g: &FracGrid) -> Result<(), CaputoError> {
        if !(self.lambda >= 0.0) {
            return Err(CaputoError::InvalidInput(format!(
                "lambda = {} must be non-negative",
                self.lambda
            )));
        }
        if self.r != g.r {
            return Err(CaputoError::InvalidInput(format!(
                "problem order {} differs from grid order {}",
                self.r, g.r
            )));
        }
        Ok(())
    }

    /// y₀E_{r,1}(−λtʳ) + g₀tʳE_{r,1+r}(−λtʳ) for a constant source g₀.
    pub fn closed_form(&self, t: f64) -> Result<f64, CaputoError> {
        let g0 = match self.source {
            Source::Constant(c) => c,
            Source::Function(_) => return Err(CaputoError::NoClosedForm),
        };
        let tr = t.powf(self.r);
        let z = -self.lambda * tr;
        let mut y = self.y0 * ml(self.r, 1.0, z, 0)?;
        if g0 != 0.0 {
            y += g0 * tr * ml(self.r, 1.0 + self.r, z, 0)?;
        }
        Ok(y)
    }
}

/// Implicit L1: c b₀(y_n − y_{n−1}) + c·history + λy_n = g(t_n), c = τ^{−r}/Γ(2−r).
pub fn solve_scalar_fode(p: &FodeProblem, g: &FracGrid) -> Result<Vec<f64>, CaputoError> {
    p.validate(g)?;
    let c = g.scale();
    let mut y = Vec::with_capacity(g.steps + 1);
    y.push(p.y0);
    let denom = c * g.weights[0] + p.lambda;
    for n in 1..=g.steps {
        let rhs = c * g.weights[0] * y[n - 1] - c * g.history(n, &y) + p.source.at(g.time(n));
        y.push(rhs / denom);
    }
    Ok(y)
}

/// Least-squares slope of log(max nodal error) against log τ.
pub fn empirical_order(p: &FodeProblem, t_max: f64, steps: &[usize]) -> Result<f64, CaputoError> {
    let exact = |t: f64| p.closed_form(t);
    // Surface NoClosedForm before any stepping.
    exact(t_max)?;
    empirical_order_against(p, t_max, steps, &|t| exact(t).unwrap_or(f64::NAN))
}

pub fn empirical_order_against(
    p: &FodeProblem,
    t_max: f64,
    steps: &[usize],
    exact: &dyn Fn(f64) -> f64,
) -> Result<f64, CaputoError> {
    if steps.len() < 3 || steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CaputoError::InvalidInput(
            "step counts must be strictly increasing, at least three".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in steps {
        let grid = FracGrid::new(p.r, t_max, m)?;
        let y = solve_scalar_fode(p, &grid)?;
        let err = y
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, v)| (v - exact(grid.time(n))).abs())
            .fold(0.0, f64::max);
        xs.push(grid.tau().ln());
        ys.push(err.ln());
    }
    Ok(ls_slope(&xs, &ys))
}

pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Riemann–Liouville integral of order `order` of sampled data, at t_1..t_M.
///
/// Data are interpolated linearly on each cell and the kernel (t_n − s)^{order−1} is
/// integrated exactly. With `endpoint_exponent = Some(e)` the first cell uses
/// y(s) ≈ y(τ)(s/τ)^e instead, which suits data behaving like s^e at 0.
pub fn fractional_integral(
    order: f64,
    samples: &[f64],
    tau: f64,
    endpoint_exponent: Option<f64>,
) -> Result<Vec<f64>, CaputoError> {
    if !(order > 0.0) {
        return Err(CaputoError::InvalidInput(format!(
            "order {order} must be positive"
        )));
    }
    if samples.len() < 2 {
        return Err(CaputoError::LengthMismatch {
            expected: 2,
            got: samples.len(),
        });
    }
    let m = samples.len() - 1;
    let a = order;
    // ∫_{t_k}^{t_{k+1}} (t_n − s)^{a−1} φ(s) ds for the two hat pieces, in units of τ^a/Γ(a).
    // With u = n − s/τ the cell is u ∈ [n−k−1, n−k].
    let pw = |u: f64, p: f64| if u <= 0.0 { 0.0 } else { u.powf(p) };
    let mut out = Vec::with_capacity(m);
    let scale = tau.powf(a) * rgamma(a);
    for n in 1..=m {
        let mut acc = 0.0;
        let first = if endpoint_exponent.is_some() { 1 } else { 0 };
        for k in first..n {
            let (lo, hi) = ((n - k - 1) as f64, (n - k) as f64);
            // ∫ u^{a−1} du and ∫ u^a du over [lo, hi]
            let i0 = (pw(hi, a) - pw(lo, a)) / a;
            let i1 = (pw(hi, a + 1.0) - pw(lo, a + 1.0)) / (a + 1.0);
            // s/τ = n − u, hat for node k is (k+1 − s/τ) = u − (n−k−1), for node k+1 it is (n−k) − u.
            let wk = i1 - lo * i0;
            let wk1 = hi * i0 - i1;
            acc += wk * samples[k] + wk1 * samples[k + 1];
        }
        if let Some(e) = endpoint_exponent {
            // y(s) = y₁ (s/τ)^e on [0, τ]; the kernel is exact for n = 1 and
            // replaced by its linear interpolant in s for n ≥ 2.
            let y1 = samples[1];
            if n == 1 {
                acc += y1 * gamma(a) * gamma(e + 1.0) * rgamma(a + e + 1.0);
            } else {
                let k0 = (n as f64).powf(a - 1.0);
                let k1 = ((n - 1) as f64).powf(a - 1.0);
                acc += y1 * (k0 / (e + 1.0) + (k1 - k0) / (e + 2.0));
            }
        }
        out.push(scale * acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = FracGrid::new(0.4, 1.0, 500).unwrap();
        assert_eq!(g.weights()[0], 1.0);
        assert!(g.weights().windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        let mut s = 0.0;
        for (n, b) in g.weights().iter().enumerate() {
            s += b;
            assert!((s - ((n + 1) as f64).powf(0.6)).abs() < 1e-12 * s);
        }
        assert!(FracGrid::new(1.0, 1.0, 10).is_err());
        assert!(FracGrid::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn l1_of_constant_and_linear() {
        let g = FracGrid::new(0.5, 1.0, 256).unwrap();
        let d = l1_apply(&g, &vec![3.0; 257]).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
        // linear data: L1 is exact for piecewise-linear functions
        let y: Vec<f64> = g.times();
        let d = l1_apply(&g, &y).unwrap();
        for (n, v) in d.iter().enumerate() {
            let t = g.time(n + 1);
            assert!((v - t.powf(0.5) / gamma(1.5)).abs() < 1e-12);
        }
        assert!(matches!(
            l1_apply(&g, &[0.0; 3]),
            Err(CaputoError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn l1_of_relaxation_solution() {
        let r = 0.5;
        let g = FracGrid::new(r, 1.0, 1024).unwrap();
        let y: Vec<f64> = g
            .times()
            .iter()
            .map(|t| ml(r, 1.0, -t.powf(r), 0).unwrap())
            .collect();
        let d = l1_apply(&g, &y).unwrap();
        // compare away from the weakly singular start
        let err = (g.steps() / 2..g.steps())
            .map(|n| (d[n] + y[n + 1]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn scalar_examples() {
        let g = FracGrid::new(0.5, 1.0, 2048).unwrap();
        let y = solve_scalar_fode(&FodeProblem::homogeneous(0.5, 1.0, 1.0), &g).unwrap();
        let exact = 0.4275835761558070044;
        assert!((y[2048] - exact).abs() < 1e-3);

        let p = FodeProblem {
            r: 0.5,
            lambda: 0.0,
            y0: 0.0,
            source: Source::Constant(1.0),
        };
        let g = FracGrid::new(0.5, 1.0, 512).unwrap();
        let y = solve_scalar_fode(&p, &g).unwrap();
        assert!((y[512] - 1.0 / gamma(1.5)).abs() < 1e-3);

        let y = solve_scalar_fode(&FodeProblem::homogeneous(0.5, 1.0, 0.0), &g).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn smooth_solution_shows_two_minus_r() {
        // y = t², g = Γ(3)/Γ(3−r) t^{2−r} + λt²
        for &r in &[0.3, 0.5, 0.8] {
            let lambda = 1.0;
            let src = move |t: f64| 2.0 * rgamma(3.0 - r) * t.powf(2.0 - r) + lambda * t * t;
            let p = FodeProblem {
                r,
                lambda,
                y0: 0.0,
                source: Source::Function(Arc::new(src)),
            };
            let slope = empirical_order_against(&p, 1.0, &[64, 128, 256, 512], &|t| t * t).unwrap();
            assert!((slope - (2.0 - r)).abs() < 0.15, "r={r}: {slope}");
        }
    }

    #[test]
    fn closed_form_requires_constant_source() {
        let p = FodeProblem {
            r: 0.5,
            lambda: 1.0,
            y0: 1.0,
            source: Source::Function(Arc::new(|t| t)),
        };
        assert!(matches!(
            empirical_order(&p, 1.0, &[8, 16, 32]),
            Err(CaputoError::NoClosedForm)
        ));
    }

    #[test]
    fn fractional_integral_of_smooth_data() {
        // I^a 1 = t^a / Γ(a+1)
        let y = vec![1.0; 101];
        let v = fractional_integral(0.5, &y, 0.01, None).unwrap();
        assert!((v[99] - 1.0 / gamma(1.5)).abs() < 1e-12);
    }
}
