//! Optimal teaching sets for Bayesian learners with conjugate
//! exponential-family models.
//!
//! The teacher picks a data set `D` minimizing `−log p(θ*|D) + effort(D)`.
//! For conjugate models the posterior only depends on `n = |D|` and the
//! aggregate statistics `s = Σ T(xᵢ)`, so the search runs in two steps: a
//! convex problem over relaxed `(n, s)` ([`solver::solve_step1`]) followed by
//! unpacking `s` into concrete examples ([`solver::unpack`]).

pub mod analytic;
pub mod effort;
pub mod error;
pub mod evaluation;
pub mod expfam;
pub mod models;
pub mod numerics;
pub mod scenario;
pub mod solver;
pub mod teachdim;

pub use error::{Result, TeachError};
