//! Homogeneous Riemannian structure tensors on S²×ℝ and H²×ℝ.
//!
//! The crate enumerates Lie subspaces of the isometry algebras, builds the
//! structure tensor of each reductive decomposition at the origin, provides
//! the closed-form tensor fields on explicit charts, and certifies the
//! Ambrose–Singer equations `∇̃g = 0, ∇̃R = 0, ∇̃T = 0` numerically.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod diffgeo;
pub mod exact;
pub mod matlie;
pub mod models;
pub mod reductive;
pub mod verifier;

/// Exact rational scalar used for structure constants and subspace families.
pub type Rational = num_rational::Rational64;
