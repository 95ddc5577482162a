//! Symbols a(x, ξ) on ℝ×ℝ with their mixed derivatives.

use super::SgError;
use crate::special::factorial;
use std::sync::Arc;

type EvalFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type DerivFn = dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    /// coeffs[i][j] multiplies x^i ξ^j
    Polynomial(Vec<Vec<f64>>),
    Closed {
        eval: Arc<EvalFn>,
        deriv: Arc<DerivFn>,
    },
    Sampled(Arc<EvalFn>),
}

/// A symbol with SG orders (m, μ), hypoellipticity orders (m′, μ′) and exterior radius R.
#[derive(Clone)]
pub struct SymbolField {
    name: String,
    kind: Kind,
    orders: (f64, f64),
    hypo_orders: (f64, f64),
    exterior_radius: f64,
    max_order: usize,
}

impl std::fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolField")
            .field("name", &self.name)
            .field("orders", &self.orders)
            .field("hypo_orders", &self.hypo_orders)
            .field("exterior_radius", &self.exterior_radius)
            .field("max_order", &self.max_order)
            .finish()
    }
}

pub const BUILTIN_NAMES: [&str; 2] = ["poly_sg", "multiplier_xi2"];

/// Highest derivative order trusted from finite differences.
pub const SAMPLED_MAX_ORDER: usize = 6;

impl SymbolField {
    /// (1 + x²)(1 + ξ²), orders (2, 2), hypoelliptic with (2, 2) and R = 0.
    pub fn poly_sg() -> Self {
        let coeffs = vec![vec![1.0, 0.0, 1.0], vec![0.0; 3], vec![1.0, 0.0, 1.0]];
        Self::polynomial("poly_sg", coeffs, (2.0, 2.0))
            .expect("valid built-in")
            .with_hypo_orders(2.0, 2.0, 0.0)
            .expect("valid built-in")
    }

    /// ξ², independent of x.
    pub fn multiplier_xi2() -> Self {
        Self::polynomial("multiplier_xi2", vec![vec![0.0, 0.0, 1.0]], (2.0, 2.0))
            .expect("valid built-in")
            .with_hypo_orders(0.0, 2.0, 0.0)
            .expect("valid built-in")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "poly_sg" => Some(Self::poly_sg()),
            "multiplier_xi2" => Some(Self::multiplier_xi2()),
            _ => None,
        }
    }

    /// Σ coeffs[i][j] x^i ξ^j with exact derivatives.
    pub fn polynomial(
        name: impl Into<String>,
        coeffs: Vec<Vec<f64>>,
        orders: (f64, f64),
    ) -> Result<Self, SgError> {
        if coeffs.is_empty() || coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(SgError::InvalidSymbol(
                "polynomial coefficients must be finite and non-empty".into(),
            ));
        }
        Self::build(name.into(), Kind::Polynomial(coeffs), orders, usize::MAX)
    }

    /// Closed-form symbol; `deriv(θ, σ, x, ξ)` returns ∂ₓ^θ ∂_ξ^σ a.
    pub fn closed_form(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
        orders: (f64, f64),
        max_order: usize,
    ) -> Result<Self, SgError> {
        Self::build(
            name.into(),
            Kind::Closed {
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
            orders,
            max_order,
        )
    }

    /// Symbol known only through its values; derivatives come from central differences.
    pub fn sampled(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        orders: (f64, f64),
    ) -> Result<Self, SgError> {
        Self::build(
            name.into(),
            Kind::Sampled(Arc::new(eval)),
            orders,
            SAMPLED_MAX_ORDER,
        )
    }

    fn build(
        name: String,
        kind: Kind,
        orders: (f64, f64),
        max_order: usize,
    ) -> Result<Self, SgError> {
        if !(orders.0 > 0.0 && orders.1 > 0.0) || !orders.0.is_finite() || !orders.1.is_finite() {
            return Err(SgError::InvalidSymbol(format!(
                "orders {orders:?} must be positive"
            )));
        }
        Ok(Self {
            name,
            kind,
            orders,
            hypo_orders: (0.0, 0.0),
            exterior_radius: 0.0,
            max_order,
        })
    }

    pub fn with_hypo_orders(mut self, m: f64, mu: f64, radius: f64) -> Result<Self, SgError> {
        if !(0.0..=self.orders.0).contains(&m) || !(0.0..=self.orders.1).contains(&mu) {
            return Err(SgError::InvalidSymbol(format!(
                "hypoellipticity orders ({m}, {mu}) must lie in [0, {}]×[0, {}]",
                self.orders.0, self.orders.1
            )));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(SgError::InvalidSymbol(format!(
                "exterior radius {radius} must be non-negative"
            )));
        }
        self.hypo_orders = (m, mu);
        self.exterior_radius = radius;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn orders(&self) -> (f64, f64) {
        self.orders
    }
    pub fn hypo_orders(&self) -> (f64, f64) {
        self.hypo_orders
    }
    pub fn exterior_radius(&self) -> f64 {
        self.exterior_radius
    }
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Degree in ξ when the symbol is a polynomial in ξ.
    pub fn xi_degree(&self) -> Option<usize> {
        match &self.kind {
            Kind::Polynomial(c) => Some(
                c.iter()
                    .map(|row| row.iter().rposition(|v| *v != 0.0).unwrap_or(0))
                    .max()
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    /// True for polynomial symbols with no x-dependence.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            Kind::Polynomial(c) => c.iter().skip(1).flatten().all(|v| *v == 0.0),
            _ => false,
        }
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match &self.kind {
            Kind::Polynomial(_) => self.deriv(0, 0, x, xi),
            Kind::Closed { eval, .. } | Kind::Sampled(eval) => eval(x, xi),
        }
    }

    /// ∂ₓ^θ ∂_ξ^σ a(x, ξ).
    pub fn deriv(&self, theta: usize, sigma: usize, x: f64, xi: f64) -> f64 {
        match &self.kind {
            Kind::Polynomial(c) => poly_deriv(c, theta, sigma, x, xi),
            Kind::Closed { eval, deriv } => {
                if theta + sigma == 0 {
                    eval(x, xi)
                } else {
                    deriv(theta, sigma, x, xi)
                }
            }
            Kind::Sampled(f) => central_difference(&**f, theta, sigma, x, xi),
        }
    }
}

fn poly_deriv(c: &[Vec<f64>], theta: usize, sigma: usize, x: f64, xi: f64) -> f64 {
    let mut total = 0.0;
    for (i, row) in c.iter().enumerate().skip(theta) {
        let fx = factorial(i) / factorial(i - theta) * x.powi((i - theta) as i32);
        for (j, cij) in row.iter().enumerate().skip(sigma) {
            if *cij != 0.0 {
                total +=
                    cij * fx * factorial(j) / factorial(j - sigma) * xi.powi((j - sigma) as i32);
            }
        }
    }
    total
}

/// Central stencil Σ (−1)^i C(k,i) f(x + (k/2 − i)h) / h^k in each variable, with
/// h = ε^{1/(k+2)}(1 + |x|) where k is the total order.
fn central_difference(f: &EvalFn, theta: usize, sigma: usize, x: f64, xi: f64) -> f64 {
    let k = theta + sigma;
    if k == 0 {
        return f(x, xi);
    }
    let step = f64::EPSILON.powf(1.0 / (k as f64 + 2.0));
    let hx = step * (1.0 + x.abs());
    let hxi = step * (1.0 + xi.abs());
    let weights = |order: usize| -> Vec<(f64, f64)> {
        (0..=order)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                (
                    sign * crate::special::binomial(order, i),
                    order as f64 / 2.0 - i as f64,
                )
            })
            .collect()
    };
    let mut total = 0.0;
    for (wx, ox) in weights(theta) {
        for (wxi, oxi) in weights(sigma) {
            total += wx * wxi * f(x + ox * hx, xi + oxi * hxi);
        }
    }
    total / (hx.powi(theta as i32) * hxi.powi(sigma as i32))
}
