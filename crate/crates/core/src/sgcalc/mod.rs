//! Variable-coefficient problems ∂ₜʳu + Op(a)u = 0 in one space dimension, for SG
//! symbols a(x, ξ), through the parametrix of sʳ + a and the kernels it induces.

mod evolution;
mod parametrix;
mod phase;
mod symbol;

pub use evolution::{
    assemble_k0, assemble_k1, assemble_kernels, operator_matrix, quantize, real_symbol,
    reference_evolution, solve_var_hom, Kernels,
};
pub use parametrix::{
    compose_expand, composition_order, corrector_numerators_at, kernel_expansion,
    parametrix_residual, parametrix_terms, KernelExpansion, Parametrix, MAX_CORRECTORS,
};
pub use phase::{
    check_hypotheses, FailingPoint, HypoReport, PhaseGrid, SymbolTable, HYPOTHESIS_ORDER,
};
pub use symbol::{SymbolField, BUILTIN_NAMES, SAMPLED_MAX_ORDER};

use crate::caputo::CaputoError;
use crate::mlf::MlError;
use crate::multiplier::{GridError, MultiplierError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SgError {
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("need derivatives of order {needed}, symbol provides {available}")]
    InsufficientDerivOrder { needed: usize, available: usize },
    #[error(
        "{correctors} correctors requested, at most {} supported",
        MAX_CORRECTORS
    )]
    TruncationUnsupported { correctors: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("s = {s} lies below the admissible bound {lambda}")]
    InadmissibleS { s: f64, lambda: f64 },
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("Mittag-Leffler evaluation failed at (x, xi) = ({x}, {xi}): {source}")]
    Ml { x: f64, xi: f64, source: MlError },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Multiplier(#[from] MultiplierError),
    #[error(transparent)]
    Caputo(#[from] CaputoError),
}

#[cfg(test)]
mod tests;
