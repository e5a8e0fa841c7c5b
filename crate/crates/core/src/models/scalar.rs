//! Scalar models with `T(x) = x` and a Gamma prior on the rate.

use rand::RngCore;
use rand_distr::{Distribution, Exp, Poisson as PoissonDist};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::expfam::{ConjugateFamily, ConjugateHyper, ExampleDomain, Item, NaturalParam};
use crate::numerics::{digamma, log_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Exponential,
    Poisson,
}

/// `Gamma(α, β)` prior on a rate, shape/rate parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(domain("Gamma prior needs alpha > 0 and beta > 0"));
        }
        Ok(Self { alpha, beta })
    }
}

/// Exponential (`θ = −rate`, `A = −ln(−θ)`) or Poisson (`θ = ln rate`,
/// `A = e^θ`) likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarModel {
    pub kind: ScalarKind,
}

/// Builds the model for `kind`.
pub fn scalar_model(kind: ScalarKind) -> ScalarModel {
    ScalarModel { kind }
}

impl ScalarModel {
    pub fn hyper(&self, prior: &GammaPrior) -> ConjugateHyper {
        match self.kind {
            ScalarKind::Exponential => ConjugateHyper { lambda1: vec![prior.beta], lambda2: prior.alpha - 1.0 },
            ScalarKind::Poisson => ConjugateHyper { lambda1: vec![prior.alpha], lambda2: prior.beta },
        }
    }

    pub fn target(&self, rate: f64) -> Result<NaturalParam> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(domain(format!("rate must be positive, got {rate}")));
        }
        match self.kind {
            ScalarKind::Exponential => NaturalParam::new(vec![-rate]),
            ScalarKind::Poisson => NaturalParam::new(vec![rate.ln()]),
        }
    }

    pub fn rate_of(&self, theta: &NaturalParam) -> f64 {
        let t = theta.as_slice()[0];
        match self.kind {
            ScalarKind::Exponential => -t,
            ScalarKind::Poisson => t.exp(),
        }
    }

    /// `(shape, rate)` of the Gamma prior encoded by `hyper`.
    fn shape_rate(&self, hyper: &ConjugateHyper) -> (f64, f64) {
        match self.kind {
            ScalarKind::Exponential => (hyper.lambda2 + 1.0, hyper.lambda1[0]),
            ScalarKind::Poisson => (hyper.lambda1[0], hyper.lambda2),
        }
    }
}

impl ConjugateFamily for ScalarModel {
    fn stat_dim(&self) -> usize {
        1
    }

    fn example_domain(&self) -> ExampleDomain {
        match self.kind {
            ScalarKind::Exponential => ExampleDomain::PositiveReal,
            ScalarKind::Poisson => ExampleDomain::NonNegativeInteger,
        }
    }

    fn sufficient_stats(&self, item: &Item) -> Result<Vec<f64>> {
        match (self.kind, item) {
            (ScalarKind::Exponential, Item::Real(x)) if *x >= 0.0 && x.is_finite() => Ok(vec![*x]),
            (ScalarKind::Poisson, Item::Count(c)) => Ok(vec![*c as f64]),
            (ScalarKind::Poisson, Item::Real(x)) if *x >= 0.0 && x.fract() == 0.0 => Ok(vec![*x]),
            (kind, other) => Err(domain(format!("{kind:?} cannot use example {other:?}"))),
        }
    }

    fn log_partition(&self, theta: &NaturalParam) -> Result<f64> {
        let t = theta.as_slice()[0];
        match self.kind {
            ScalarKind::Exponential if t < 0.0 => Ok(-(-t).ln()),
            ScalarKind::Exponential => Err(domain("exponential needs θ < 0")),
            ScalarKind::Poisson => Ok(t.exp()),
        }
    }

    fn hyper_in_domain(&self, hyper: &ConjugateHyper) -> bool {
        let (shape, rate) = self.shape_rate(hyper);
        shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
    }

    /// `lnΓ(shape) − shape · ln(rate)` in both cases.
    fn prior_log_partition(&self, hyper: &ConjugateHyper) -> Result<f64> {
        let (shape, rate) = self.shape_rate(hyper);
        if !(rate > 0.0) {
            return Err(domain("Gamma rate must be positive"));
        }
        Ok(log_gamma(shape)? - shape * rate.ln())
    }

    fn prior_log_partition_grad(&self, hyper: &ConjugateHyper) -> Result<(Vec<f64>, f64)> {
        let (shape, rate) = self.shape_rate(hyper);
        if !(rate > 0.0) {
            return Err(domain("Gamma rate must be positive"));
        }
        let d_shape = digamma(shape)? - rate.ln();
        let d_rate = -shape / rate;
        Ok(match self.kind {
            ScalarKind::Exponential => (vec![d_rate], d_shape),
            ScalarKind::Poisson => (vec![d_shape], d_rate),
        })
    }

    fn stat_lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn sample(&self, theta: &NaturalParam, rng: &mut dyn RngCore) -> Item {
        let rate = self.rate_of(theta);
        match self.kind {
            ScalarKind::Exponential => Item::Real(Exp::new(rate).expect("positive rate").sample(rng)),
            ScalarKind::Poisson => {
                let x: f64 = PoissonDist::new(rate).expect("positive rate").sample(rng);
                Item::Count(x as u64)
            }
        }
    }

    /// Exponential: `h₀ = 1` and `dθ/dλ = −1`. Poisson: `h₀ = 1` and
    /// `dθ/dλ = 1/λ`.
    fn ti_offset(&self, theta: &NaturalParam) -> f64 {
        match self.kind {
            ScalarKind::Exponential => 0.0,
            ScalarKind::Poisson => self.rate_of(theta).ln(),
        }
    }
}
