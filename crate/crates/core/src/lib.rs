//! Sparse-recovery toolkit built around adaptively iterative thresholding.
//!
//! The crate has three layers:
//!
//! * solvers — the AIT family (`hard`, `soft`, `half`, `two_thirds`, `scad`
//!   thresholding with an adaptive per-iteration threshold) plus an OMP
//!   baseline ([`solver`], [`thresholding`], [`baselines`]);
//! * matrix analysis — coherence, restricted isometry constants and their
//!   `(p, q)` generalization, contraction constants, step-size intervals and
//!   condition certificates ([`analysis`]);
//! * experiments — seeded problem generation and the experiment harnesses
//!   (sparsity sweeps, normalization comparison, 50% phase-transition curves,
//!   convergence-bound verification) ([`probgen`], [`experiments`]).
//!
//! Everything is deterministic given a seed: identical configs produce
//! bit-identical outputs.

// negated float comparisons below are validation guards that must treat
// NaN as invalid
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod io;
pub mod probgen;
pub mod solver;
pub mod thresholding;

pub use error::{Error, Result};
pub use thresholding::ThresholdingOperator;
