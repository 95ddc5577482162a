//! Scalar special-function helpers shared by the solvers.

use std::f64::consts::PI;

/// Gamma function. Poles at non-positive integers return `inf`/`nan` as libm does.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Reciprocal gamma, zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 171.0 {
        let (lg, _) = libm::lgamma_r(x);
        return (-lg).exp();
    }
    1.0 / libm::tgamma(x)
}

/// ln|Γ(x)| together with the sign of Γ(x).
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (lg, sign) = libm::lgamma_r(x);
    (lg, if sign < 0 { -1.0 } else { 1.0 })
}

/// sin(πx) with exact zeros at the integers.
pub fn sinpi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r == 0.5 {
        return 1.0;
    }
    if r == 1.5 {
        return -1.0;
    }
    (PI * r).sin()
}

/// cos(πx) with exact zeros at the half-integers.
pub fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Falling factorial k (k-1) ... (k-j+1).
pub fn falling(k: usize, j: usize) -> f64 {
    if j > k {
        return 0.0;
    }
    ((k - j + 1)..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Compensated (Kahan–Babuška) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
