//! Concrete conjugate models.

mod gaussian;
mod multinomial;
mod niw;
mod scalar;

pub use gaussian::{gaussian_step1_objective, optimal_count, optimal_sum_at, GaussianMean, GaussianMeanPrior};
pub use multinomial::{counts_of, items_from_counts, multinomial_step1_objective, Multinomial};
pub use niw::{
    niw_density_offset, niw_neg_log_density, niw_posterior, niw_step1_gradient, niw_step1_objective, sample_moments,
    sample_point, CrossTerm, NiwGradient, NiwModel, NiwPosterior, NiwPrior, NiwStats, NiwTarget, RidgeBound,
};
pub use scalar::{scalar_model, GammaPrior, ScalarKind, ScalarModel};
