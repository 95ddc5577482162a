//! Constant-coefficient problems ∂ₜʳu + a(D)u = f on a periodic grid, solved mode by
//! mode with û(t) = E_{r,1}(−tʳa)û₀ + ∫₀ᵗ τ^{r−1}E_{r,r}(−τʳa) f̂(t−τ) dτ.

mod grid;

pub use grid::{GridError, GridSpec, Transform};

use crate::caputo::{l1_apply, solve_scalar_fode, CaputoError, FodeProblem, FracGrid};
use crate::mlf::{ml, MlError};
use crate::special::rgamma;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

pub const DEFAULT_QUAD_STEPS: usize = 512;
pub const MIN_QUAD_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultiplierError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("symbol value {value} at xi = {xi:?} is negative or not finite")]
    BadSymbol { xi: Vec<f64>, value: f64 },
    #[error("Mittag-Leffler evaluation failed at xi = {xi:?}: {source}")]
    Mode { xi: Vec<f64>, source: MlError },
    #[error(transparent)]
    Caputo(#[from] CaputoError),
}

type SymbolFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A Fourier multiplier a(ξ) ≥ 0.
#[derive(Clone)]
pub struct MultiplierSymbol {
    eval: Arc<SymbolFn>,
    growth_tag: String,
}

impl std::fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MultiplierSymbol({})", self.growth_tag)
    }
}

impl MultiplierSymbol {
    pub fn new(
        growth_tag: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            growth_tag: growth_tag.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0)
    }

    /// k|ξ|².
    pub fn laplacian(k: f64) -> Self {
        Self::new("|xi|^2", move |xi| {
            k * xi.iter().map(|v| v * v).sum::<f64>()
        })
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        (self.eval)(xi)
    }

    pub fn growth_tag(&self) -> &str {
        &self.growth_tag
    }

    /// a at every spectral index of the grid, checked to be finite and non-negative.
    pub fn on_grid(&self, grid: &GridSpec) -> Result<Vec<f64>, MultiplierError> {
        (0..grid.len())
            .map(|k| {
                let xi = grid.freq_point(k);
                let value = self.eval(&xi);
                if value >= 0.0 && value.is_finite() {
                    Ok(value)
                } else {
                    Err(MultiplierError::BadSymbol { xi, value })
                }
            })
            .collect()
    }
}

/// Grid values at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub grid: GridSpec,
    pub time: f64,
    pub values: Vec<Complex64>,
}

impl StateField {
    pub fn new(grid: GridSpec, time: f64, values: Vec<Complex64>) -> Result<Self, MultiplierError> {
        grid.check_len(values.len())?;
        if !(time >= 0.0) || !time.is_finite() {
            return Err(MultiplierError::InvalidInput(format!(
                "time {time} must be non-negative"
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(MultiplierError::InvalidInput(
                "field has non-finite entries".into(),
            ));
        }
        Ok(Self { grid, time, values })
    }

    pub fn from_fn(grid: GridSpec, time: f64, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|m| Complex64::new(f(&grid.point(m)), 0.0))
            .collect();
        Self { grid, time, values }
    }

    pub fn zeros(grid: GridSpec, time: f64) -> Self {
        Self {
            grid,
            time,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Discrete L² norm (Σ|u|² h^d)^{1/2}.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// ‖self − other‖ / ‖other‖.
    pub fn rel_l2_diff(&self, other: &StateField) -> Result<f64, MultiplierError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch.into());
        }
        let num: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        Ok(if num == 0.0 { 0.0 } else { (num / den).sqrt() })
    }

    pub fn add(&self, other: &StateField) -> Result<StateField, MultiplierError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch.into());
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(StateField {
            grid: self.grid,
            time: self.time,
            values,
        })
    }
}

fn check_order(r: f64) -> Result<(), MultiplierError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(MultiplierError::InvalidInput(format!(
            "order r = {r} must lie in (0,1)"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), MultiplierError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(MultiplierError::InvalidInput(format!(
            "time t = {t} must be non-negative"
        )));
    }
    Ok(())
}

/// Evaluates `f` once per distinct symbol value and spreads the results over the modes.
fn per_distinct<T, F>(grid: &GridSpec, a: &[f64], f: F) -> Result<Vec<T>, MultiplierError>
where
    T: Clone + Send,
    F: Fn(f64) -> Result<T, MlError> + Sync,
{
    let mut slots: BTreeMap<u64, usize> = BTreeMap::new();
    let mut distinct = Vec::new();
    let index: Vec<usize> = a
        .iter()
        .map(|v| {
            *slots.entry(v.to_bits()).or_insert_with(|| {
                distinct.push(*v);
                distinct.len() - 1
            })
        })
        .collect();
    let results: Vec<Result<T, MlError>> = distinct.par_iter().map(|&v| f(v)).collect();
    let mut values = Vec::with_capacity(results.len());
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => values.push(v),
            Err(source) => {
                let k = index.iter().position(|&s| s == i).unwrap_or(0);
                return Err(MultiplierError::Mode {
                    xi: grid.freq_point(k),
                    source,
                });
            }
        }
    }
    Ok(index.iter().map(|&i| values[i].clone()).collect())
}

/// û(t, ξ) = E_{r,1}(−tʳa(ξ)) û₀(ξ).
pub fn evolve_hom(
    u0: &StateField,
    a: &MultiplierSymbol,
    r: f64,
    t: f64,
) -> Result<StateField, MultiplierError> {
    check_order(r)?;
    check_time(t)?;
    let grid = u0.grid;
    grid.check_len(u0.values.len())?;
    if t == 0.0 {
        return Ok(StateField {
            time: t,
            ..u0.clone()
        });
    }
    let symbol = a.on_grid(&grid)?;
    let tr = t.powf(r);
    let mult = per_distinct(&grid, &symbol, |v| {
        if v == 0.0 {
            Ok(1.0)
        } else {
            ml(r, 1.0, -tr * v, 0)
        }
    })?;
    apply_diagonal(u0, &mult, t)
}

fn apply_diagonal(u: &StateField, mult: &[f64], time: f64) -> Result<StateField, MultiplierError> {
    let tr = Transform::new(u.grid);
    let mut spec = tr.forward(&u.values)?;
    spec.iter_mut().zip(mult).for_each(|(v, m)| *v *= *m);
    Ok(StateField {
        grid: u.grid,
        time,
        values: tr.inverse(&spec)?,
    })
}

/// Same evolution with every mode advanced by the L1 scheme on `steps` uniform steps.
pub fn evolve_hom_stepped(
    u0: &StateField,
    a: &MultiplierSymbol,
    r: f64,
    t: f64,
    steps: usize,
) -> Result<StateField, MultiplierError> {
    check_order(r)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(StateField {
            time: t,
            ..u0.clone()
        });
    }
    let grid = u0.grid;
    let symbol = a.on_grid(&grid)?;
    let fg = FracGrid::new(r, t, steps)?;
    let mut slots: BTreeMap<u64, f64> = BTreeMap::new();
    for &v in &symbol {
        if let std::collections::btree_map::Entry::Vacant(e) = slots.entry(v.to_bits()) {
            let y = solve_scalar_fode(&FodeProblem::homogeneous(r, v, 1.0), &fg)?;
            e.insert(y[steps]);
        }
    }
    let mult: Vec<f64> = symbol.iter().map(|v| slots[&v.to_bits()]).collect();
    apply_diagonal(u0, &mult, t)
}

/// Product-integration weights w_i with ∫₀ᵗ τ^{r−1}E_{r,r}(−τʳa) φ(τ) dτ ≈ Σ w_i φ(τ_i)
/// for φ linear between the nodes τ_i = it/Q. The kernel is integrated exactly
/// through its antiderivatives x^r E_{r,r+1}(−ax^r) and x^{r+1} E_{r,r+2}(−ax^r).
pub fn duhamel_weights(r: f64, a: f64, t: f64, steps: usize) -> Result<Vec<f64>, MlError> {
    let h = t / steps as f64;
    let nodes: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let mut g1 = Vec::with_capacity(steps + 1);
    let mut g2 = Vec::with_capacity(steps + 1);
    for &x in &nodes {
        if x == 0.0 {
            g1.push(0.0);
            g2.push(0.0);
            continue;
        }
        let xr = x.powf(r);
        let (e1, e2) = if a == 0.0 {
            (rgamma(r + 1.0), rgamma(r + 2.0))
        } else {
            (ml(r, r + 1.0, -a * xr, 0)?, ml(r, r + 2.0, -a * xr, 0)?)
        };
        g1.push(xr * e1);
        g2.push(x * xr * e2);
    }
    let mut w = vec![0.0; steps + 1];
    for i in 0..steps {
        let i0 = g1[i + 1] - g1[i];
        let i1 = (nodes[i + 1] * g1[i + 1] - g2[i + 1]) - (nodes[i] * g1[i] - g2[i]);
        w[i] += (nodes[i + 1] * i0 - i1) / h;
        w[i + 1] += (i1 - nodes[i] * i0) / h;
    }
    Ok(w)
}

fn check_source(f: &[StateField], t: f64, quad_steps: usize) -> Result<GridSpec, MultiplierError> {
    if quad_steps < MIN_QUAD_STEPS {
        return Err(MultiplierError::InvalidInput(format!(
            "quad_steps = {quad_steps} must be at least {MIN_QUAD_STEPS}"
        )));
    }
    if f.len() != quad_steps + 1 {
        return Err(GridError::ShapeMismatch {
            expected: quad_steps + 1,
            got: f.len(),
        }
        .into());
    }
    let grid = f[0].grid;
    for (i, s) in f.iter().enumerate() {
        if s.grid != grid {
            return Err(GridError::GridMismatch.into());
        }
        let expected = t * i as f64 / quad_steps as f64;
        if (s.time - expected).abs() > 1e-9 * t.max(1.0) {
            return Err(MultiplierError::InvalidInput(format!(
                "source sample {i} is at time {}, expected {expected}",
                s.time
            )));
        }
    }
    Ok(grid)
}

/// Times at which `duhamel_term` expects its source samples.
pub fn source_times(t: f64, quad_steps: usize) -> Vec<f64> {
    (0..=quad_steps)
        .map(|i| t * i as f64 / quad_steps as f64)
        .collect()
}

/// ∫₀ᵗ τ^{r−1}E_{r,r}(−τʳa(ξ)) f̂(t−τ, ξ) dτ per mode; `f[i]` is the source at time it/Q.
pub fn duhamel_term(
    f: &[StateField],
    a: &MultiplierSymbol,
    r: f64,
    t: f64,
    quad_steps: usize,
) -> Result<StateField, MultiplierError> {
    check_order(r)?;
    check_time(t)?;
    if f.is_empty() {
        return Err(MultiplierError::InvalidInput("no source samples".into()));
    }
    let grid = check_source(f, t, quad_steps)?;
    if t == 0.0
        || f.iter()
            .all(|s| s.values.iter().all(|v| *v == Complex64::default()))
    {
        return Ok(StateField::zeros(grid, t));
    }
    let tr = Transform::new(grid);
    let spectra: Vec<Vec<Complex64>> = f
        .iter()
        .map(|s| tr.forward(&s.values))
        .collect::<Result<_, _>>()?;
    let symbol = a.on_grid(&grid)?;
    let weights = per_distinct(&grid, &symbol, |v| {
        duhamel_weights(r, v, t, quad_steps).map(Arc::new)
    })?;
    let spec: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let w = &weights[k];
            // node τ_i pairs with the source at time t − τ_i
            (0..=quad_steps)
                .map(|i| spectra[quad_steps - i][k] * w[i])
                .sum()
        })
        .collect();
    Ok(StateField {
        grid,
        time: t,
        values: tr.inverse(&spec)?,
    })
}

pub fn evolve_full(
    u0: &StateField,
    f: &[StateField],
    a: &MultiplierSymbol,
    r: f64,
    t: f64,
    quad_steps: usize,
) -> Result<StateField, MultiplierError> {
    let hom = evolve_hom(u0, a, r, t)?;
    let inh = duhamel_term(f, a, r, t, quad_steps)?;
    if inh.grid != hom.grid {
        return Err(GridError::GridMismatch.into());
    }
    hom.add(&inh)
}

/// Source samples at `source_times(t, q)` and exact solution at t for u* = E_{r,1}(−sʳ)g,
/// i.e. f̂(s) = (a(ξ) − 1)E_{r,1}(−sʳ)ĝ.
pub fn manufactured_problem(
    g: &StateField,
    a: &MultiplierSymbol,
    r: f64,
    t: f64,
    quad_steps: usize,
) -> Result<(Vec<StateField>, StateField), MultiplierError> {
    check_order(r)?;
    check_time(t)?;
    let grid = g.grid;
    let tr = Transform::new(grid);
    let g_hat = tr.forward(&g.values)?;
    let symbol = a.on_grid(&grid)?;
    let decay = |s: f64| {
        if s == 0.0 {
            return Ok(1.0);
        }
        ml(r, 1.0, -s.powf(r), 0)
            .map_err(|e| MultiplierError::InvalidInput(format!("E_r,1(-s^r) at s = {s}: {e}")))
    };
    let f = source_times(t, quad_steps)
        .into_iter()
        .map(|s| {
            let e = decay(s)?;
            let spec: Vec<Complex64> = g_hat
                .iter()
                .zip(&symbol)
                .map(|(v, av)| v * (av - 1.0) * e)
                .collect();
            Ok(StateField {
                grid,
                time: s,
                values: tr.inverse(&spec)?,
            })
        })
        .collect::<Result<Vec<_>, MultiplierError>>()?;
    let e = decay(t)?;
    let exact = StateField {
        grid,
        time: t,
        values: g.values.iter().map(|v| v * e).collect(),
    };
    Ok((f, exact))
}

/// Relative residual of ∂ₜʳu + a(D)u = f over t_1..t_M, measured per mode against the
/// larger of |f̂| and |aû|. The time derivative is the L1 scheme on the snapshot times,
/// which must be uniform and start at 0.
pub fn caputo_residual(
    snapshots: &[StateField],
    f: &[StateField],
    a: &MultiplierSymbol,
    r: f64,
) -> Result<f64, MultiplierError> {
    check_order(r)?;
    if snapshots.len() < 3 {
        return Err(MultiplierError::InvalidInput(
            "need at least three snapshots".into(),
        ));
    }
    if f.len() != snapshots.len() {
        return Err(GridError::ShapeMismatch {
            expected: snapshots.len(),
            got: f.len(),
        }
        .into());
    }
    let steps = snapshots.len() - 1;
    let t_max = snapshots[steps].time;
    let grid = snapshots[0].grid;
    for (i, (u, g)) in snapshots.iter().zip(f).enumerate() {
        if u.grid != grid || g.grid != grid {
            return Err(GridError::GridMismatch.into());
        }
        let expected = t_max * i as f64 / steps as f64;
        if (u.time - expected).abs() > 1e-9 * t_max || (g.time - expected).abs() > 1e-9 * t_max {
            return Err(MultiplierError::InvalidInput(format!(
                "snapshot {i} is not on the uniform grid"
            )));
        }
    }
    let fg = FracGrid::new(r, t_max, steps)?;
    let tr = Transform::new(grid);
    let u_hat: Vec<Vec<Complex64>> = snapshots
        .iter()
        .map(|s| tr.forward(&s.values))
        .collect::<Result<_, _>>()?;
    let f_hat: Vec<Vec<Complex64>> = f
        .iter()
        .map(|s| tr.forward(&s.values))
        .collect::<Result<_, _>>()?;
    let symbol = a.on_grid(&grid)?;

    let mut res = 0.0;
    let mut scale = 0.0;
    for k in 0..grid.len() {
        let re: Vec<f64> = u_hat.iter().map(|s| s[k].re).collect();
        let im: Vec<f64> = u_hat.iter().map(|s| s[k].im).collect();
        let d_re = l1_apply(&fg, &re)?;
        let d_im = l1_apply(&fg, &im)?;
        for n in 1..=steps {
            let au = u_hat[n][k] * symbol[k];
            let rv = Complex64::new(d_re[n - 1], d_im[n - 1]) + au - f_hat[n][k];
            res += rv.norm_sqr();
            scale += f_hat[n][k].norm_sqr().sqrt().max(au.norm()).powi(2);
        }
    }
    Ok(if res == 0.0 {
        0.0
    } else {
        (res / scale).sqrt()
    })
}
