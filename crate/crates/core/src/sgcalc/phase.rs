//! Phase-space sampling (x_m, ξ_k) and the hypothesis diagnostics.

use super::{SgError, SymbolField};
use crate::multiplier::GridSpec;
use std::collections::BTreeMap;

/// x_m and ξ_k of a line grid; flat index m·n + k with ξ in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    grid: GridSpec,
    x: Vec<f64>,
    xi: Vec<f64>,
    a: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(grid: GridSpec, a: &SymbolField) -> Result<Self, SgError> {
        if grid.dim() != 1 {
            return Err(SgError::InvalidInput(format!(
                "phase grids are one-dimensional, got dim {}",
                grid.dim()
            )));
        }
        let x = grid.nodes();
        let xi = grid.freqs();
        let values = x
            .iter()
            .flat_map(|&xv| xi.iter().map(move |&k| (xv, k)))
            .map(|(xv, k)| a.eval(xv, k))
            .collect();
        Ok(Self {
            grid,
            x,
            xi,
            a: values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn n(&self) -> usize {
        self.grid.n()
    }
    pub fn len(&self) -> usize {
        self.x.len() * self.xi.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    /// a(x_m, ξ_k) at flat index m·n + k.
    pub fn symbol(&self) -> &[f64] {
        &self.a
    }
    pub fn point(&self, flat: usize) -> (f64, f64) {
        let n = self.n();
        (self.x[flat / n], self.xi[flat % n])
    }

    /// ∂ₓ^θ ∂_ξ^σ a for θ ≤ max_x, σ ≤ max_xi on every phase point.
    pub fn tabulate(&self, a: &SymbolField, max_x: usize, max_xi: usize) -> SymbolTable {
        let mut derivs = BTreeMap::new();
        for th in 0..=max_x {
            for sg in 0..=max_xi {
                let values = (0..self.len())
                    .map(|i| {
                        let (x, xi) = self.point(i);
                        a.deriv(th, sg, x, xi)
                    })
                    .collect();
                derivs.insert((th, sg), values);
            }
        }
        SymbolTable {
            len: self.len(),
            derivs,
        }
    }
}

/// Derivative values of one symbol on a phase grid, keyed by (x-order, ξ-order).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    len: usize,
    derivs: BTreeMap<(usize, usize), Vec<f64>>,
}

impl SymbolTable {
    pub fn get(&self, theta: usize, sigma: usize) -> Option<&[f64]> {
        self.derivs.get(&(theta, sigma)).map(|v| v.as_slice())
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailingPoint {
    pub x: f64,
    pub xi: f64,
    pub check: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypoReport {
    /// max over points and 0 ≤ |θ|+|σ| ≤ 3 of |∂a|⟨x⟩^{θ−m}⟨ξ⟩^{σ−μ}
    pub h1_ratio_max: f64,
    /// min of a⟨x⟩^{−m′}⟨ξ⟩^{−μ′} on |x| + |ξ| ≥ R
    pub h2_lower_margin: f64,
    /// max of |∂a|⟨x⟩^θ⟨ξ⟩^σ / a on |x| + |ξ| ≥ R, 1 ≤ |θ|+|σ| ≤ 3
    pub h3_ratio_max: f64,
    /// fitted constants per derivative (θ, σ)
    pub h1_constants: BTreeMap<(usize, usize), f64>,
    pub h3_constants: BTreeMap<(usize, usize), f64>,
    pub failing_points: Vec<FailingPoint>,
}

impl HypoReport {
    pub fn is_clean(&self) -> bool {
        self.failing_points.is_empty()
    }

    /// Constant C₀₀ with |a| ≤ C₀₀⟨x⟩^m⟨ξ⟩^μ on the sample.
    pub fn c00(&self) -> f64 {
        self.h1_constants.get(&(0, 0)).copied().unwrap_or(0.0)
    }

    /// max(10, C₀₀^{1/r} + 1), the smallest Laplace variable used for the parametrix.
    pub fn admissible_s(&self, r: f64) -> f64 {
        (self.c00().powf(1.0 / r) + 1.0).max(10.0)
    }
}

pub const HYPOTHESIS_ORDER: usize = 3;

fn japanese(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

pub fn check_hypotheses(a: &SymbolField, grid: &PhaseGrid) -> HypoReport {
    let (m, mu) = a.orders();
    let (mp, mup) = a.hypo_orders();
    let radius = a.exterior_radius();
    let mut h1: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut h3: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut margin = f64::INFINITY;
    let mut failing = Vec::new();
    let order = HYPOTHESIS_ORDER.min(a.max_order());

    for i in 0..grid.len() {
        let (x, xi) = grid.point(i);
        let (jx, jxi) = (japanese(x), japanese(xi));
        let value = grid.symbol()[i];
        let exterior = x.abs() + xi.abs() >= radius;
        let mut bad_h1 = !value.is_finite();
        let mut bad_h3 = false;
        for th in 0..=order {
            for sg in 0..=order - th {
                let d = if th + sg == 0 {
                    value
                } else {
                    a.deriv(th, sg, x, xi)
                };
                let r1 = d.abs() * jx.powf(th as f64 - m) * jxi.powf(sg as f64 - mu);
                bad_h1 |= !r1.is_finite();
                let e = h1.entry((th, sg)).or_insert(0.0);
                *e = e.max(r1);
                if exterior && th + sg > 0 {
                    let r3 = if d == 0.0 {
                        0.0
                    } else {
                        d.abs() * jx.powi(th as i32) * jxi.powi(sg as i32) / value
                    };
                    let r3 = if value > 0.0 {
                        r3
                    } else if d == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    bad_h3 |= !r3.is_finite();
                    let e = h3.entry((th, sg)).or_insert(0.0);
                    *e = e.max(r3);
                }
            }
        }
        if bad_h1 {
            failing.push(FailingPoint { x, xi, check: "H1" });
        }
        if exterior {
            let lower = value * jx.powf(-mp) * jxi.powf(-mup);
            margin = margin.min(lower);
            if !(lower > 0.0) {
                failing.push(FailingPoint { x, xi, check: "H2" });
            }
            if bad_h3 {
                failing.push(FailingPoint { x, xi, check: "H3" });
            }
        }
    }
    HypoReport {
        h1_ratio_max: h1.values().copied().fold(0.0, f64::max),
        h2_lower_margin: margin,
        h3_ratio_max: h3.values().copied().fold(0.0, f64::max),
        h1_constants: h1,
        h3_constants: h3,
        failing_points: failing,
    }
}
