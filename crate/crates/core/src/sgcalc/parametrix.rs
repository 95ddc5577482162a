//! Asymptotic composition and the parametrix c_s ~ Σ A_j / (sʳ + a)^{j+1} of sʳ + a.
//!
//! Every field is carried per phase point as a truncated Taylor series in x, so that
//! x-derivatives of products stay exact up to the truncation order. A corrector
//! is a list of such series indexed by the power of w = 1/(sʳ + a); with
//! ∂ₓw = −aₓw² nothing in the recursion depends on s.

use super::phase::{check_hypotheses, PhaseGrid, SymbolTable};
use super::{quantize, SgError, SymbolField};
use crate::multiplier::StateField;
use crate::special::factorial;
use num_complex::Complex64;
use rayon::prelude::*;

pub const MAX_CORRECTORS: usize = 3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// (−i)^k / k!
fn comp_weight(k: usize) -> Complex64 {
    (-I).powu(k as u32) / factorial(k)
}

/// Σ_{k≤N} (−i)^k/k! ∂_ξ^k p · ∂ₓ^k q on the phase grid.
pub fn compose_expand(
    p: &SymbolTable,
    q: &SymbolTable,
    order: usize,
) -> Result<Vec<Complex64>, SgError> {
    if p.len() != q.len() {
        return Err(SgError::ShapeMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut out = vec![Complex64::default(); p.len()];
    for k in 0..=order {
        let dp = p.get(0, k).ok_or(SgError::InsufficientDerivOrder {
            needed: k,
            available: k.saturating_sub(1),
        })?;
        let dq = q.get(k, 0).ok_or(SgError::InsufficientDerivOrder {
            needed: k,
            available: k.saturating_sub(1),
        })?;
        let wk = comp_weight(k);
        for ((o, a), b) in out.iter_mut().zip(dp).zip(dq) {
            *o += wk * a * b;
        }
    }
    Ok(out)
}

type Jet = Vec<Complex64>;

fn jet_mul(a: &[Complex64], b: &[Complex64]) -> Jet {
    let n = a.len();
    let mut out = vec![Complex64::default(); n];
    for (i, ai) in a.iter().enumerate() {
        if *ai == Complex64::default() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn jet_deriv(a: &[Complex64]) -> Jet {
    let mut out = vec![Complex64::default(); a.len()];
    for i in 1..a.len() {
        out[i - 1] = a[i] * i as f64;
    }
    out
}

fn jet_axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// ∂ₓ of Σ_p C_p w^p, using ∂ₓ(C w^p) = C′w^p − p aₓ C w^{p+1}.
fn corrector_deriv(c: &[Jet], a_x: &[Complex64]) -> Vec<Jet> {
    let len = a_x.len();
    let mut out = vec![vec![Complex64::default(); len]; c.len() + 1];
    for (p, cp) in c.iter().enumerate() {
        if cp.iter().all(|v| *v == Complex64::default()) {
            continue;
        }
        jet_axpy(&mut out[p], Complex64::new(1.0, 0.0), &jet_deriv(cp));
        if p > 0 {
            jet_axpy(
                &mut out[p + 1],
                Complex64::new(-(p as f64), 0.0),
                &jet_mul(a_x, cp),
            );
        }
    }
    out
}

/// A_0..A_{J+1} at one phase point from the x-series of ∂_ξ^k a, k = 0..=N.
fn corrector_numerators(a_jets: &[Jet], correctors: usize, comp_order: usize) -> Vec<Complex64> {
    let a_x = jet_deriv(&a_jets[0]);
    let len = a_x.len();
    let mut one = vec![Complex64::default(); len];
    one[0] = Complex64::new(1.0, 0.0);
    // c = w to start with
    let mut c: Vec<Jet> = vec![vec![Complex64::default(); len], one.clone()];
    let mut numerators = vec![Complex64::new(1.0, 0.0)];
    for j in 1..=correctors + 1 {
        // coefficient of w^j in Σ_{k≥1} (−i)^k/k! ∂_ξ^k a · ∂ₓ^k c; the k = 0 term
        // b·c = Σ C_p w^{p−1} has nothing at w^j yet, since C_{j+1} = 0.
        let mut coeff = vec![Complex64::default(); len];
        let mut dc = c.clone();
        for (k, a_k) in a_jets.iter().enumerate().take(comp_order + 1).skip(1) {
            dc = corrector_deriv(&dc, &a_x);
            if let Some(term) = dc.get(j) {
                jet_axpy(&mut coeff, comp_weight(k), &jet_mul(a_k, term));
            }
        }
        let a_j: Jet = coeff.iter().map(|v| -v).collect();
        numerators.push(a_j[0]);
        c.resize(j + 2, vec![Complex64::default(); len]);
        c[j + 1] = a_j;
    }
    numerators
}

/// The s-free numerators A_j of the parametrix, j = 0..=J+1, on the phase grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    pub r: f64,
    pub correctors: usize,
    pub composition_order: usize,
    pub terms: Vec<Vec<Complex64>>,
}

impl KernelExpansion {
    pub fn term(&self, j: usize) -> &[Complex64] {
        &self.terms[j]
    }
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
    /// Power of t multiplying term j in K₀.
    pub fn k0_time_exponent(&self, j: usize) -> f64 {
        j as f64 * self.r
    }
    /// Power of t multiplying term j in K₁.
    pub fn k1_time_exponent(&self, j: usize) -> f64 {
        j as f64 * self.r + self.r - 1.0
    }
    pub fn max_abs(&self, j: usize) -> f64 {
        self.terms[j].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Order at which the composition series is cut: exact for symbols polynomial in ξ.
pub fn composition_order(a: &SymbolField, correctors: usize) -> usize {
    a.xi_degree().unwrap_or(correctors + 1).max(1)
}

fn check_correctors(a: &SymbolField, correctors: usize) -> Result<(), SgError> {
    if correctors > MAX_CORRECTORS {
        return Err(SgError::TruncationUnsupported { correctors });
    }
    let needed = 2 * correctors + 2;
    if a.max_order() < needed {
        return Err(SgError::InsufficientDerivOrder {
            needed,
            available: a.max_order(),
        });
    }
    Ok(())
}

fn jets_at(a: &SymbolField, x: f64, xi: f64, jet_len: usize, n_comp: usize) -> Vec<Jet> {
    (0..=n_comp)
        .map(|k| {
            (0..jet_len)
                .map(|th| Complex64::new(a.deriv(th, k, x, xi) / factorial(th), 0.0))
                .collect()
        })
        .collect()
}

fn jet_len(n_comp: usize, correctors: usize) -> usize {
    n_comp * (correctors + 1) + 2
}

/// A_0..A_{J+1} at a single phase point.
pub fn corrector_numerators_at(
    a: &SymbolField,
    x: f64,
    xi: f64,
    correctors: usize,
) -> Result<Vec<Complex64>, SgError> {
    check_correctors(a, correctors)?;
    let n_comp = composition_order(a, correctors);
    Ok(corrector_numerators(
        &jets_at(a, x, xi, jet_len(n_comp, correctors), n_comp),
        correctors,
        n_comp,
    ))
}

pub fn kernel_expansion(
    a: &SymbolField,
    grid: &PhaseGrid,
    r: f64,
    correctors: usize,
) -> Result<KernelExpansion, SgError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(SgError::InvalidInput(format!(
            "order r = {r} must lie in (0,1)"
        )));
    }
    check_correctors(a, correctors)?;
    let n_comp = composition_order(a, correctors);
    let len = jet_len(n_comp, correctors);
    let per_point: Vec<Vec<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, xi) = grid.point(i);
            corrector_numerators(&jets_at(a, x, xi, len, n_comp), correctors, n_comp)
        })
        .collect();
    let terms = (0..=correctors + 1)
        .map(|j| per_point.iter().map(|v| v[j]).collect())
        .collect();
    Ok(KernelExpansion {
        r,
        correctors,
        composition_order: n_comp,
        terms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parametrix {
    pub expansion: KernelExpansion,
    pub s: f64,
    /// c_s = Σ A_j (sʳ + a)^{−j−1} on the phase grid
    pub values: Vec<Complex64>,
}

pub fn parametrix_terms(
    a: &SymbolField,
    grid: &PhaseGrid,
    r: f64,
    correctors: usize,
    s: f64,
) -> Result<Parametrix, SgError> {
    check_correctors(a, correctors)?;
    let report = check_hypotheses(a, grid);
    let lambda = report.admissible_s(r);
    if !(s >= lambda) || !s.is_finite() {
        return Err(SgError::InadmissibleS { s, lambda });
    }
    let sr = s.powf(r);
    if let Some(i) = grid.symbol().iter().position(|v| !(sr + v > 0.0)) {
        let (x, xi) = grid.point(i);
        return Err(SgError::HypothesisViolation(format!(
            "s^r + a vanishes at (x, xi) = ({x}, {xi})"
        )));
    }
    let expansion = kernel_expansion(a, grid, r, correctors)?;
    let values = grid
        .symbol()
        .iter()
        .enumerate()
        .map(|(i, av)| {
            let w = 1.0 / (sr + av);
            expansion
                .terms
                .iter()
                .enumerate()
                .map(|(j, t)| t[i] * w.powi(j as i32 + 1))
                .sum()
        })
        .collect();
    Ok(Parametrix {
        expansion,
        s,
        values,
    })
}

/// ‖Op(sʳ + a)Op(c_s)φ − φ‖ / ‖φ‖.
pub fn parametrix_residual(
    a: &SymbolField,
    grid: &PhaseGrid,
    r: f64,
    correctors: usize,
    s: f64,
    phi: &StateField,
) -> Result<f64, SgError> {
    let par = parametrix_terms(a, grid, r, correctors, s)?;
    let v = quantize(grid, &par.values, phi)?;
    let symbol: Vec<Complex64> = grid
        .symbol()
        .iter()
        .map(|v| Complex64::new(*v, 0.0))
        .collect();
    let av = quantize(grid, &symbol, &v)?;
    let sr = s.powf(r);
    let num: f64 = v
        .values
        .iter()
        .zip(&av.values)
        .zip(&phi.values)
        .map(|((vi, ai), p)| (vi * sr + ai - p).norm_sqr())
        .sum();
    let den: f64 = phi.values.iter().map(|p| p.norm_sqr()).sum();
    Ok((num / den).sqrt())
}
