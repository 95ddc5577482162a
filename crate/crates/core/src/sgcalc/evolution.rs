//! Kohn–Nirenberg quantization on the grid, the kernels K₀/K₁ and the
//! variable-coefficient solver built from them.

use super::parametrix::{kernel_expansion, KernelExpansion};
use super::phase::PhaseGrid;
use super::{SgError, SymbolField};
use crate::caputo::FracGrid;
use crate::mlf::ml;
use crate::multiplier::{StateField, Transform};
use crate::special::factorial;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// e^{i x_m ξ_k} at flat index m·n + k.
fn phase_factors(grid: &PhaseGrid) -> Vec<Complex64> {
    grid.x()
        .iter()
        .flat_map(|x| {
            grid.xi()
                .iter()
                .map(move |xi| Complex64::from_polar(1.0, x * xi))
        })
        .collect()
}

/// (Op(p)u)(x_m) = n^{−1} Σ_k e^{i x_m ξ_k} p(x_m, ξ_k) û(ξ_k).
pub fn quantize(grid: &PhaseGrid, p: &[Complex64], u: &StateField) -> Result<StateField, SgError> {
    if p.len() != grid.len() {
        return Err(SgError::ShapeMismatch {
            expected: grid.len(),
            got: p.len(),
        });
    }
    if u.grid != *grid.grid() {
        return Err(SgError::ShapeMismatch {
            expected: grid.n(),
            got: u.grid.n(),
        });
    }
    let n = grid.n();
    let u_hat = Transform::new(u.grid).forward(&u.values)?;
    let phases = phase_factors(grid);
    let values = (0..n)
        .map(|m| {
            let row = m * n..(m + 1) * n;
            phases[row.clone()]
                .iter()
                .zip(&p[row])
                .zip(&u_hat)
                .map(|((e, pv), uv)| e * pv * uv)
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    Ok(StateField {
        grid: u.grid,
        time: u.time,
        values,
    })
}

pub fn real_symbol(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|v| Complex64::new(*v, 0.0)).collect()
}

/// Σ_j t^{jr+shift}/j! A_j E^{(j)}_{r,β}(−tʳa) for β = 1 (shift 0) or β = r (shift r − 1).
fn kernel_sum(
    exp: &KernelExpansion,
    grid: &PhaseGrid,
    t: f64,
    beta: f64,
    shift: f64,
) -> Result<Vec<Complex64>, SgError> {
    let r = exp.r;
    let tr = t.powf(r);
    let symbol = grid.symbol();
    // one Mittag-Leffler value per distinct (a, j) that carries a nonzero numerator
    let mut needed: BTreeMap<(u64, usize), usize> = BTreeMap::new();
    for (j, term) in exp.terms.iter().enumerate() {
        for (i, v) in term.iter().enumerate() {
            if *v != Complex64::default() {
                needed.entry((symbol[i].to_bits(), j)).or_insert(i);
            }
        }
    }
    let keys: Vec<((u64, usize), usize)> = needed.into_iter().collect();
    let values: Vec<Result<f64, SgError>> = keys
        .par_iter()
        .map(|&((bits, j), i)| {
            let av = f64::from_bits(bits);
            ml(r, beta, -tr * av, j).map_err(|source| {
                let (x, xi) = grid.point(i);
                SgError::Ml { x, xi, source }
            })
        })
        .collect();
    let mut table = BTreeMap::new();
    for (k, v) in keys.iter().zip(values) {
        table.insert(k.0, v?);
    }
    let weights: Vec<f64> = (0..exp.term_count())
        .map(|j| {
            let e = j as f64 * r + shift;
            if e == 0.0 {
                1.0 / factorial(j)
            } else {
                t.powf(e) / factorial(j)
            }
        })
        .collect();
    Ok((0..grid.len())
        .map(|i| {
            let key = symbol[i].to_bits();
            exp.terms
                .iter()
                .enumerate()
                .filter(|(_, term)| term[i] != Complex64::default())
                .map(|(j, term)| term[i] * weights[j] * table[&(key, j)])
                .sum()
        })
        .collect())
}

/// K₀(t) = Σ_j t^{jr}/j! A_j E^{(j)}_{r,1}(−tʳa).
pub fn assemble_k0(
    exp: &KernelExpansion,
    grid: &PhaseGrid,
    t: f64,
) -> Result<Vec<Complex64>, SgError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(SgError::InvalidInput(format!(
            "time t = {t} must be non-negative"
        )));
    }
    kernel_sum(exp, grid, t, 1.0, 0.0)
}

/// K₁(t) = Σ_j t^{jr+r−1}/j! A_j E^{(j)}_{r,r}(−tʳa), for t > 0.
pub fn assemble_k1(
    exp: &KernelExpansion,
    grid: &PhaseGrid,
    t: f64,
) -> Result<Vec<Complex64>, SgError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(SgError::InvalidInput(format!(
            "time t = {t} must be positive for K1"
        )));
    }
    kernel_sum(exp, grid, t, exp.r, exp.r - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernels {
    pub k0: Vec<Complex64>,
    pub k1: Vec<Complex64>,
}

pub fn assemble_kernels(
    a: &SymbolField,
    grid: &PhaseGrid,
    correctors: usize,
    r: f64,
    t: f64,
) -> Result<Kernels, SgError> {
    let exp = kernel_expansion(a, grid, r, correctors)?;
    Ok(Kernels {
        k0: assemble_k0(&exp, grid, t)?,
        k1: assemble_k1(&exp, grid, t)?,
    })
}

fn check_nonnegative(grid: &PhaseGrid) -> Result<(), SgError> {
    if let Some(i) = grid
        .symbol()
        .iter()
        .position(|v| !(*v >= 0.0) || !v.is_finite())
    {
        let (x, xi) = grid.point(i);
        return Err(SgError::HypothesisViolation(format!(
            "symbol is negative or not finite at (x, xi) = ({x}, {xi})"
        )));
    }
    Ok(())
}

/// u(t) = Op(K₀(t))u₀ with K₀ truncated after J correctors.
pub fn solve_var_hom(
    a: &SymbolField,
    u0: &StateField,
    r: f64,
    t: f64,
    correctors: usize,
) -> Result<StateField, SgError> {
    let grid = PhaseGrid::new(u0.grid, a)?;
    check_nonnegative(&grid)?;
    let exp = kernel_expansion(a, &grid, r, correctors)?;
    let k0 = assemble_k0(&exp, &grid, t)?;
    let mut u = quantize(&grid, &k0, u0)?;
    u.time = t;
    Ok(u)
}

/// Op(a) as a dense matrix acting on grid values.
pub fn operator_matrix(grid: &PhaseGrid, p: &[Complex64]) -> DMatrix<Complex64> {
    let n = grid.n();
    let phases = phase_factors(grid);
    let x = grid.x();
    // (Op p)_{m,m'} = n^{−1} Σ_k e^{i x_m ξ_k} p(x_m, ξ_k) e^{−i x_{m'} ξ_k}
    DMatrix::from_fn(n, n, |m, mp| {
        (0..n)
            .map(|k| {
                phases[m * n + k] * p[m * n + k] * Complex64::from_polar(1.0, -x[mp] * grid.xi()[k])
            })
            .sum::<Complex64>()
            / n as f64
    })
}

/// L1 time stepping of ∂ₜʳu + Op(a)u = 0 with a dense LU solve per step.
pub fn reference_evolution(
    a: &SymbolField,
    u0: &StateField,
    r: f64,
    t: f64,
    steps: usize,
) -> Result<StateField, SgError> {
    let grid = PhaseGrid::new(u0.grid, a)?;
    check_nonnegative(&grid)?;
    let fg = FracGrid::new(r, t, steps)?;
    let n = grid.n();
    let c = fg.scale();
    let b = fg.weights();
    let op = operator_matrix(&grid, &real_symbol(grid.symbol()));
    let system = DMatrix::<Complex64>::identity(n, n) * Complex64::new(c * b[0], 0.0) + op;
    let lu = system.lu();
    let mut history: Vec<Vec<Complex64>> = Vec::with_capacity(steps);
    let mut u = u0.values.clone();
    for step in 1..=steps {
        let mut rhs: Vec<Complex64> = u.iter().map(|v| v * (c * b[0])).collect();
        for k in 1..step {
            let d = &history[step - k - 1];
            let wk = c * b[k];
            rhs.iter_mut().zip(d).for_each(|(r, dv)| *r -= dv * wk);
        }
        let next = lu
            .solve(&nalgebra::DVector::from_vec(rhs))
            .ok_or_else(|| SgError::HypothesisViolation("L1 system matrix is singular".into()))?;
        let next: Vec<Complex64> = next.iter().copied().collect();
        history.push(next.iter().zip(&u).map(|(a, b)| a - b).collect());
        u = next;
    }
    Ok(StateField {
        grid: u0.grid,
        time: t,
        values: u,
    })
}
