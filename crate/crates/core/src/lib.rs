//! Maslov index of the path of unstable subspaces for the linearization
//! `u'' + V(x) u = λ u` of a one-dimensional reaction-diffusion equation
//! about a steady state.
//!
//! The frame `(X; Y)` of the unstable subspace is integrated across a
//! truncated line. Crossings of the vertical plane are the zeros of `det X`,
//! where eigenvalues of the Riccati chart `S = Y X⁻¹` blow up; each singular
//! eigenvalue contributes `+1` if it runs from `+∞` to `−∞` and `−1` if it
//! runs from `−∞` to `+∞`. The crossing form gives an independent signature
//! at every crossing and the two are required to agree.

// `!(a > b)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod examples;
pub mod integrate;
pub mod lagrangian;
pub mod linalg;
pub mod problem;
pub mod tracker;

pub use error::{MaslovError, Result};
pub use integrate::{IntegratorConfig, Method};
pub use problem::Problem;
pub use tracker::{maslov_index, sweep, CrossingRecord, Diagnostics, MaslovResult};
