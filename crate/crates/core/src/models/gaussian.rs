use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{domain, Result};
use crate::expfam::{
    step1_objective, AggregateStats, ConjugateFamily, ConjugateHyper, ExampleDomain, Item, NaturalParam,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Univariate Gaussian with known variance σ²; only the mean is taught.
///
/// `T(x) = x`, `θ = μ/σ²`, `A(θ) = θ²σ²/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMean {
    pub sigma2: f64,
}

/// Prior `μ ~ N(μ₀, σ₀²)` in standard form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMeanPrior {
    pub mu0: f64,
    pub sigma0_2: f64,
}

impl GaussianMean {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { sigma2 })
    }

    pub fn target(&self, mu_star: f64) -> Result<NaturalParam> {
        NaturalParam::new(vec![mu_star / self.sigma2])
    }

    pub fn mean_of(&self, theta: &NaturalParam) -> f64 {
        theta.as_slice()[0] * self.sigma2
    }
}

impl GaussianMeanPrior {
    pub fn new(mu0: f64, sigma0_2: f64) -> Result<Self> {
        if !(sigma0_2.is_finite() && sigma0_2 > 0.0 && mu0.is_finite()) {
            return Err(domain("prior needs a finite mean and positive variance"));
        }
        Ok(Self { mu0, sigma0_2 })
    }

    /// `λ₁ = μ₀σ²/σ₀²`, `λ₂ = σ²/σ₀²`
    pub fn to_hyper(&self, model: &GaussianMean) -> ConjugateHyper {
        let ratio = model.sigma2 / self.sigma0_2;
        ConjugateHyper { lambda1: vec![self.mu0 * ratio], lambda2: ratio }
    }

    pub fn from_hyper(model: &GaussianMean, hyper: &ConjugateHyper) -> Result<Self> {
        if !(hyper.lambda2 > 0.0) {
            return Err(domain("lambda2 must be positive"));
        }
        Self::new(hyper.lambda1[0] / hyper.lambda2, model.sigma2 / hyper.lambda2)
    }
}

impl ConjugateFamily for GaussianMean {
    fn stat_dim(&self) -> usize {
        1
    }

    fn example_domain(&self) -> ExampleDomain {
        ExampleDomain::Real
    }

    fn sufficient_stats(&self, item: &Item) -> Result<Vec<f64>> {
        match item {
            Item::Real(x) if x.is_finite() => Ok(vec![*x]),
            other => Err(domain(format!("gaussian_mean expects a real example, got {other:?}"))),
        }
    }

    fn log_partition(&self, theta: &NaturalParam) -> Result<f64> {
        let t = theta.as_slice()[0];
        Ok(0.5 * t * t * self.sigma2)
    }

    fn hyper_in_domain(&self, hyper: &ConjugateHyper) -> bool {
        hyper.lambda2 > 0.0 && hyper.lambda1.len() == 1 && hyper.lambda1[0].is_finite()
    }

    fn prior_log_partition(&self, hyper: &ConjugateHyper) -> Result<f64> {
        let (l1, l2) = (hyper.lambda1[0], hyper.lambda2);
        if !(l2 > 0.0) {
            return Err(domain("gaussian prior needs lambda2 > 0"));
        }
        Ok(l1 * l1 / (2.0 * self.sigma2 * l2) - 0.5 * (self.sigma2 * l2).ln())
    }

    fn prior_log_partition_grad(&self, hyper: &ConjugateHyper) -> Result<(Vec<f64>, f64)> {
        let (l1, l2) = (hyper.lambda1[0], hyper.lambda2);
        if !(l2 > 0.0) {
            return Err(domain("gaussian prior needs lambda2 > 0"));
        }
        let d1 = l1 / (self.sigma2 * l2);
        let d2 = -l1 * l1 / (2.0 * self.sigma2 * l2 * l2) - 0.5 / l2;
        Ok((vec![d1], d2))
    }

    fn sample(&self, theta: &NaturalParam, rng: &mut dyn RngCore) -> Item {
        let z: f64 = StandardNormal.sample(rng);
        Item::Real(self.mean_of(theta) + self.sigma2.sqrt() * z)
    }

    /// The density of μ: `½ ln 2π` from `h₀` plus `ln σ²` from `dθ/dμ`.
    fn ti_offset(&self, _theta: &NaturalParam) -> f64 {
        0.5 * LN_2PI + self.sigma2.ln()
    }
}

/// Step-1 objective for the Gaussian-mean learner in standard parameters.
pub fn gaussian_step1_objective(
    model: &GaussianMean,
    prior: &GaussianMeanPrior,
    mu_star: f64,
    effort: &EffortSpec,
    stats: &AggregateStats,
) -> Result<f64> {
    step1_objective(model, &prior.to_hyper(model), &model.target(mu_star)?, effort, stats)
}

/// Optimal aggregate statistic at fixed `n`: `s = (σ²/σ₀²)(μ* − μ₀) + μ* n`.
pub fn optimal_sum_at(model: &GaussianMean, prior: &GaussianMeanPrior, mu_star: f64, n: f64) -> f64 {
    model.sigma2 / prior.sigma0_2 * (mu_star - prior.mu0) + mu_star * n
}

/// Relaxed optimal cardinality under `PerItem(c)`: `1/(2c) − σ²/σ₀²`.
pub fn optimal_count(model: &GaussianMean, prior: &GaussianMeanPrior, c: f64) -> f64 {
    1.0 / (2.0 * c) - model.sigma2 / prior.sigma0_2
}
