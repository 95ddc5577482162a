//! Adaptive Gauss–Legendre quadrature.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("adaptive refinement exceeded depth {depth} on [{a}, {b}]")]
    DepthExceeded { depth: usize, a: f64, b: f64 },
    #[error("integrand returned a non-finite value at t = {at}")]
    NonFinite { at: f64 },
}

/// Values the quadrature can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Fixed 16-point rule on [a, b].
pub fn gl16<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> Result<T, QuadError> {
    let (x, w) = rule16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = T::zero();
    for (xi, wi) in x.iter().zip(w) {
        let t = mid + half * xi;
        let v = f(t);
        if !v.is_finite_value() {
            return Err(QuadError::NonFinite { at: t });
        }
        acc = acc + v * (wi * half);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    /// Number of equal panels used before adaptive refinement starts.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_depth: 40,
            initial_panels: 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub abs_error: f64,
    /// Integral of |f| as seen by the coarse pass; sets the scale of `rel_tol`.
    pub magnitude: f64,
}

/// Globally adaptive bisection of the 16-point rule on [a, b]: the interval with the
/// largest local error is split until the summed error meets the tolerance.
pub fn integrate<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadEstimate<T>, QuadError> {
    if a == b {
        return Ok(QuadEstimate {
            value: T::zero(),
            abs_error: 0.0,
            magnitude: 0.0,
        });
    }
    let panels = opts.initial_panels.max(1);
    let h = (b - a) / panels as f64;
    let mut magnitude = 0.0;
    let mut pieces = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels {
            b
        } else {
            a + (p + 1) as f64 * h
        };
        let mut abs_f = |t: f64| f(t).norm();
        magnitude += gl16(&mut abs_f, lo, hi)?.abs();
        let whole = gl16(&mut f, lo, hi)?;
        pieces.push(Piece::new(&mut f, lo, hi, whole, 0)?);
    }
    let tol = (opts.rel_tol * magnitude)
        .max(opts.abs_tol)
        .max(f64::MIN_POSITIVE);

    let mut heap: BinaryHeap<Piece<T>> = pieces.into_iter().collect();
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    while total_err > tol {
        let worst = heap.pop().expect("non-empty interval set");
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth + 1 >= opts.max_depth || mid <= worst.a || mid >= worst.b {
            if worst.depth + 1 >= opts.max_depth {
                return Err(QuadError::DepthExceeded {
                    depth: opts.max_depth,
                    a: worst.a,
                    b: worst.b,
                });
            }
            // Interval cannot be split further in floating point; accept it.
            total_err -= worst.err;
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let left = Piece::new(&mut f, worst.a, mid, worst.left, worst.depth + 1)?;
        let right = Piece::new(&mut f, mid, worst.b, worst.right, worst.depth + 1)?;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // Guard against drift from repeated subtraction.
        if total_err <= tol {
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut done = heap.into_vec();
    done.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = T::zero();
    let mut abs_error = 0.0;
    for p in &done {
        value = value + p.value;
        abs_error += p.err;
    }
    Ok(QuadEstimate {
        value,
        abs_error,
        magnitude,
    })
}

struct Piece<T> {
    err: f64,
    a: f64,
    b: f64,
    value: T,
    left: T,
    right: T,
    depth: usize,
}

impl<T: QuadValue> Piece<T> {
    fn new(
        f: &mut impl FnMut(f64) -> T,
        a: f64,
        b: f64,
        whole: T,
        depth: usize,
    ) -> Result<Self, QuadError> {
        let mid = 0.5 * (a + b);
        let left = gl16(f, a, mid)?;
        let right = gl16(f, mid, b)?;
        let value = left + right;
        Ok(Self {
            err: (value - whole).norm(),
            a,
            b,
            value,
            left,
            right,
            depth,
        })
    }
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq() && self.a.total_cmp(&other.a).is_eq()
    }
}

impl<T> Eq for Piece<T> {}

impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let est = integrate(|t: f64| t.sqrt(), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn complex_integrand() {
        let est = integrate(
            |t: f64| Complex64::new(0.0, t).exp(),
            0.0,
            std::f64::consts::PI,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((est.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn reports_depth_failure() {
        let opts = QuadOptions {
            max_depth: 3,
            ..Default::default()
        };
        let r = integrate(|t: f64| 1.0 / t.sqrt(), 0.0, 1.0, &opts);
        assert!(matches!(
            r,
            Err(QuadError::DepthExceeded { .. }) | Err(QuadError::NonFinite { .. })
        ));
    }
}
