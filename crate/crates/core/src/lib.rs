//! Time-fractional diffusion ∂ₜʳu + Op(a)u = f solved through Mittag-Leffler
//! representation formulas, with L1 time stepping and Talbot inversion as
//! independent checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// reference values in tests keep every digit of the high-precision source
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod caputo;
pub mod cli;
pub mod laplace;
pub mod mlf;
pub mod multiplier;
pub mod quad;
pub mod sgcalc;
pub mod special;

#[cfg(test)]
mod proptests;
