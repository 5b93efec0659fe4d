//! Explicit approximate weak KAM constructions for one-dimensional
//! mechanical Hamiltonians `H(I, φ) = I²/2 + f(φ)`.
//!
//! The penalised Hamilton–Jacobi problem
//! `½(Ĩ + u_φ)² + f(φ) + (1/k) ln(Ĩ + u_φ) = c_k` is solved in closed form
//! through the Lambert W function; the crate provides the resulting
//! minimisers, invariant densities and effective Hamiltonians, the torus
//! dynamics they generate, the mean-square defect integrals and their
//! limiting constants, and the singular limit at the pendulum separatrix.

// negated comparisons are used on purpose so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antiderivative;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod export;
pub mod lambert;
pub mod potential;
pub mod quad;
pub mod separatrix;
pub mod weakkam;

pub use error::{Error, Result};
pub use potential::Potential;
pub use quad::{QuadConfig, RootConfig};
pub use weakkam::{ActionContext, LevelCurve, Order, SignedAction};
