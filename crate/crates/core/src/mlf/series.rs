//! Power series Σ_{k≥j} k!/(k−j)! z^{k−j} / Γ(αk+β).
//!
//! A double-precision pass measures the cancellation Σ|t_k| / |Σ t_k|. When
//! that ratio would cost more digits than the tolerance allows, the sum is
//! redone in MPFR with enough bits to absorb it.

use super::{Branch, MLParams, MLResult, MlError};
use crate::special::{falling, ln_gamma_signed, rgamma, KahanSum};
use rug::Float;

pub const MAX_TERMS: usize = 1_000_000;
pub const TAIL_TOL: f64 = 1e-14;
const TERM_EPS: f64 = 2e-15;

/// log|t_k| and sign(t_k); `None` when 1/Γ(αk+β) vanishes.
fn log_term(p: MLParams, z: f64, j: usize, k: usize) -> Option<(f64, f64)> {
    let arg = p.alpha * k as f64 + p.beta;
    if arg <= 0.0 && arg == arg.floor() {
        return None;
    }
    let (lg, gsign) = ln_gamma_signed(arg);
    let m = k - j;
    let lz = if m == 0 { 0.0 } else { m as f64 * z.abs().ln() };
    let zsign = if z < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
    Some((falling(k, j).ln() + lz - lg, zsign * gsign))
}

fn term_f64(p: MLParams, z: f64, j: usize, k: usize, lt: Option<(f64, f64)>) -> f64 {
    let arg = p.alpha * k as f64 + p.beta;
    let m = (k - j) as i32;
    if arg < 170.0 && (m as f64) * z.abs().max(1.0).ln() < 700.0 {
        falling(k, j) * z.powi(m) * rgamma(arg)
    } else {
        lt.map_or(0.0, |(l, s)| s * l.exp())
    }
}

/// Tracks the geometric tail bound once the term ratios start decreasing below one.
struct TailTracker {
    prev_ratio: f64,
}

impl TailTracker {
    fn new() -> Self {
        Self {
            prev_ratio: f64::INFINITY,
        }
    }

    /// Bound on Σ_{i>k} |t_i| given log|t_k| and log|t_{k+1}|, if available.
    fn bound(&mut self, lt_k: Option<f64>, lt_next: Option<f64>, past_start: bool) -> Option<f64> {
        let next = match lt_next {
            None => return if past_start { Some(0.0) } else { None },
            Some(v) => v,
        };
        let cur = lt_k?;
        let ratio = (next - cur).exp();
        let monotone = ratio <= self.prev_ratio;
        self.prev_ratio = ratio;
        if past_start && ratio < 1.0 && monotone {
            Some(next.exp() / (1.0 - ratio))
        } else {
            None
        }
    }
}

pub fn ml_series(p: MLParams, z: f64, j: usize) -> Result<MLResult, MlError> {
    p.validate()?;
    if !z.is_finite() {
        return Err(MlError::InvalidArgument(format!("z = {z} is not finite")));
    }
    if z == 0.0 {
        return Ok(MLResult {
            value: falling(j, j) * rgamma(p.alpha * j as f64 + p.beta),
            est_rel_error: 0.0,
            branch: Branch::Series,
        });
    }

    let mut sum = KahanSum::default();
    let mut abs_sum = 0.0;
    let mut max_log = f64::NEG_INFINITY;
    let mut tracker = TailTracker::new();
    let mut lt = log_term(p, z, j, j);
    let mut k = j;
    let tail = loop {
        if k - j >= MAX_TERMS {
            return Err(MlError::NonConvergence { terms: MAX_TERMS });
        }
        if let Some((l, _)) = lt {
            max_log = max_log.max(l);
        }
        let t = term_f64(p, z, j, k, lt);
        sum.add(t);
        abs_sum += t.abs();
        let next = log_term(p, z, j, k + 1);
        let past_start = k >= j + 2;
        if let Some(b) = tracker.bound(lt.map(|v| v.0), next.map(|v| v.0), past_start) {
            if b <= TAIL_TOL * sum.value().abs() || b == 0.0 {
                break b;
            }
        }
        lt = next;
        k += 1;
    };

    let value = sum.value();
    let cancellation = if max_log > 700.0 {
        f64::INFINITY
    } else {
        abs_sum / value.abs()
    };
    let est = TERM_EPS * cancellation + tail / value.abs();
    if est.is_finite() && est <= 10.0 * TAIL_TOL {
        return Ok(MLResult {
            value,
            est_rel_error: est,
            branch: Branch::Series,
        });
    }
    series_mpfr(p, z, j, max_log)
}

/// Same series in MPFR. Precision grows until the cancellation is covered.
fn series_mpfr(p: MLParams, z: f64, j: usize, max_log: f64) -> Result<MLResult, MlError> {
    let log2_max = (max_log / std::f64::consts::LN_2).max(0.0);
    let mut prec = 96 + log2_max.ceil() as u32;
    for _ in 0..4 {
        let (value, tail, cancel_bits) = sum_mpfr(p, z, j, prec)?;
        let needed = 64.0 + cancel_bits;
        if (prec as f64) >= needed {
            let rounding = 2f64.powf(cancel_bits - prec as f64) * 4.0;
            return Ok(MLResult {
                value,
                est_rel_error: rounding + tail / value.abs(),
                branch: Branch::Series,
            });
        }
        prec = needed.ceil() as u32 + 32;
    }
    Err(MlError::NonConvergence { terms: MAX_TERMS })
}

/// α = p/q with small p and q, up to a few ulps of α.
fn small_rational(alpha: f64) -> Option<(u32, usize)> {
    (1..=64usize).find_map(|q| {
        let p = (alpha * q as f64).round();
        let close = (alpha - p / q as f64).abs() <= 4.0 * f64::EPSILON * alpha;
        (close && (1.0..=64.0).contains(&p)).then_some((p as u32, q))
    })
}

fn sum_mpfr(p: MLParams, z: f64, j: usize, prec: u32) -> Result<(f64, f64, f64), MlError> {
    let rational = small_rational(p.alpha);
    let (alpha, beta) = match rational {
        Some((num, den)) => (
            Float::with_val(prec, num) / den as u32,
            Float::with_val(prec, p.beta),
        ),
        None => (
            Float::with_val(prec, p.alpha),
            Float::with_val(prec, p.beta),
        ),
    };
    let zf = Float::with_val(prec, z);
    let mut zpow = Float::with_val(prec, 1.0);
    let mut sum = Float::with_val(prec, 0.0);
    let mut max_abs_log2 = f64::NEG_INFINITY;
    let mut tracker = TailTracker::new();
    // For α = p/q, Γ(α(k+q)+β) = Γ(αk+β)·(αk+β)(αk+β+1)···(αk+β+p−1), so only
    // q gamma values are computed directly. `ring[k % q]` holds Γ(αk+β).
    let mut ring: Vec<Option<Float>> = vec![None; rational.map_or(0, |(_, q)| q)];

    let mut k = j;
    let tail = loop {
        if k - j >= MAX_TERMS {
            return Err(MlError::NonConvergence { terms: MAX_TERMS });
        }
        let arg = Float::with_val(prec, &alpha * k as u32) + &beta;
        let pole = arg <= 0 && arg.is_integer();
        let slot = rational.map(|(_, q)| k % q);
        let gamma = match (rational, slot.and_then(|i| ring[i].as_ref())) {
            (Some((num, q)), Some(g)) if k >= q && !pole => {
                let mut g = g.clone();
                let mut x = Float::with_val(prec, &alpha * (k - q) as u32) + &beta;
                for _ in 0..num {
                    g *= &x;
                    x += 1;
                }
                g
            }
            _ => Float::with_val(prec, arg.gamma_ref()),
        };
        if !pole {
            let mut term = Float::with_val(prec, &zpow * falling(k, j));
            term /= &gamma;
            if !term.is_zero() {
                if let Some(e) = term.get_exp() {
                    max_abs_log2 = max_abs_log2.max(e as f64);
                }
            }
            sum += &term;
        }
        if let Some(i) = slot {
            ring[i] = if pole { None } else { Some(gamma) };
        }

        let lt_k = log_term(p, z, j, k).map(|v| v.0);
        let lt_next = log_term(p, z, j, k + 1).map(|v| v.0);
        let past_start = k >= j + 2;
        if let Some(b) = tracker.bound(lt_k, lt_next, past_start) {
            let s = sum.to_f64().abs();
            if b <= 1e-3 * TAIL_TOL * s || b == 0.0 {
                break b;
            }
        }
        zpow *= &zf;
        k += 1;
    };
    let value = sum.to_f64();
    let cancel_bits = (max_abs_log2 - value.abs().log2()).max(0.0);
    Ok((value, tail, cancel_bits))
}
