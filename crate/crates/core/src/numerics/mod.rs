//! Special functions and small dense linear algebra.

mod linalg;
mod special;

pub use linalg::{dot, log_det_pd, norm2, project_psd, solve_pd, SquareMatrix, SymMatrix};
pub use special::{digamma, digamma_half_sum, log_gamma, log_gamma_half_sum};
