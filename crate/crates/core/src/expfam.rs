//! Conjugate exponential families in natural parameterization.
//!
//! A likelihood `p(x|θ) = h(x) exp(θᵀT(x) − A(θ))` with conjugate prior
//! `p(θ|λ₁, λ₂) = h₀(θ) exp(λ₁ᵀθ − λ₂A(θ) − A₀(λ₁, λ₂))` sees a teaching set
//! only through its size `n` and aggregate statistics `s = Σ T(xᵢ)`; the
//! posterior has hyperparameters `(λ₁ + s, λ₂ + n)`. The teaching objective is
//! then a convex function of `(n, s)` whenever the effort is convex.

use std::fmt::Debug;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{check_dim, domain, Result};

/// Natural parameter θ of the likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParam(Vec<f64>);

impl NaturalParam {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|v| !v.is_finite()) {
            return Err(domain("natural parameter must be a nonempty finite vector"));
        }
        Ok(Self(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Natural hyperparameters `(λ₁, λ₂)` of the conjugate prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateHyper {
    pub lambda1: Vec<f64>,
    pub lambda2: f64,
}

/// Relaxed teaching-set summary: real cardinality and aggregate statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n: f64,
    pub s: Vec<f64>,
}

impl AggregateStats {
    pub fn new(n: f64, s: Vec<f64>) -> Self {
        Self { n, s }
    }

    pub fn empty(dim: usize) -> Self {
        Self { n: 0.0, s: vec![0.0; dim] }
    }

    pub fn add(&self, other: &AggregateStats) -> AggregateStats {
        AggregateStats { n: self.n + other.n, s: self.s.iter().zip(&other.s).map(|(a, b)| a + b).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite() && self.s.iter().all(|v| v.is_finite())
    }
}

/// What a single teaching example looks like for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleDomain {
    Real,
    PositiveReal,
    NonNegativeInteger,
    Category { k: usize },
    Vector { dim: usize },
}

/// One teaching example. Categories are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Item {
    Count(u64),
    Real(f64),
    Vector(Vec<f64>),
    Category(usize),
}

/// A conjugate exponential family with the `(λ₁, λ₂)` structure.
pub trait ConjugateFamily: Debug + Send + Sync {
    /// Dimension `D` of `T(x)`.
    fn stat_dim(&self) -> usize;

    fn example_domain(&self) -> ExampleDomain;

    fn sufficient_stats(&self, item: &Item) -> Result<Vec<f64>>;

    /// `A(θ)`
    fn log_partition(&self, theta: &NaturalParam) -> Result<f64>;

    fn hyper_in_domain(&self, hyper: &ConjugateHyper) -> bool;

    /// `A₀(λ₁, λ₂)`
    fn prior_log_partition(&self, hyper: &ConjugateHyper) -> Result<f64>;

    /// `(∂A₀/∂λ₁, ∂A₀/∂λ₂)`
    fn prior_log_partition_grad(&self, hyper: &ConjugateHyper) -> Result<(Vec<f64>, f64)>;

    /// For categorical data the cardinality is not free: `n = Σ s`.
    fn tied_cardinality(&self, _s: &[f64]) -> Option<f64> {
        None
    }

    /// Lower bound on each aggregate statistic, if the example domain has one.
    fn stat_lower_bound(&self) -> Option<f64> {
        None
    }

    fn stats_feasible(&self, stats: &AggregateStats) -> bool {
        stats.is_finite()
            && stats.n >= 0.0
            && stats.s.len() == self.stat_dim()
            && self.stat_lower_bound().is_none_or(|lo| stats.s.iter().all(|v| *v >= lo))
    }

    /// Draws one example from `p(x|θ)`.
    fn sample(&self, theta: &NaturalParam, rng: &mut dyn RngCore) -> Item;

    /// Constant `c(θ*)` such that `−log p(θ*|D) = step1_objective + c(θ*)`
    /// with the density taken in the model's standard parameterization.
    fn ti_offset(&self, theta: &NaturalParam) -> f64;
}

/// Posterior hyperparameters `(λ₁ + s, λ₂ + n)`.
pub fn posterior_hyper(
    family: &dyn ConjugateFamily,
    prior: &ConjugateHyper,
    stats: &AggregateStats,
) -> Result<ConjugateHyper> {
    check_dim(prior.lambda1.len(), stats.s.len())?;
    let post = ConjugateHyper {
        lambda1: prior.lambda1.iter().zip(&stats.s).map(|(l, s)| l + s).collect(),
        lambda2: prior.lambda2 + stats.n,
    };
    if !family.hyper_in_domain(&post) {
        return Err(domain("posterior hyperparameters leave the prior's domain"));
    }
    Ok(post)
}

/// `−θ*ᵀ(λ₁+s) + A(θ*)(λ₂+n) + A₀(λ₁+s, λ₂+n) + effort(n, s)`.
///
/// This is `−log p(θ*|D) + effort` up to the constant
/// [`ConjugateFamily::ti_offset`].
pub fn step1_objective(
    family: &dyn ConjugateFamily,
    prior: &ConjugateHyper,
    target: &NaturalParam,
    effort: &EffortSpec,
    stats: &AggregateStats,
) -> Result<f64> {
    check_dim(family.stat_dim(), target.dim())?;
    let post = posterior_hyper(family, prior, stats)?;
    let theta = target.as_slice();
    let linear: f64 = theta.iter().zip(&post.lambda1).map(|(t, l)| t * l).sum();
    let value = -linear
        + family.log_partition(target)? * post.lambda2
        + family.prior_log_partition(&post)?
        + effort.value(stats.n, &stats.s)?;
    Ok(value)
}

/// Gradient of [`step1_objective`] as `(∂/∂s₁, …, ∂/∂s_D, ∂/∂n)`.
pub fn step1_gradient(
    family: &dyn ConjugateFamily,
    prior: &ConjugateHyper,
    target: &NaturalParam,
    effort: &EffortSpec,
    stats: &AggregateStats,
) -> Result<Vec<f64>> {
    check_dim(family.stat_dim(), target.dim())?;
    let post = posterior_hyper(family, prior, stats)?;
    let (d_lambda1, d_lambda2) = family.prior_log_partition_grad(&post)?;
    let (e_n, e_s) = effort.gradient(stats.n, &stats.s)?;
    let mut grad: Vec<f64> = target.as_slice().iter().zip(&d_lambda1).zip(&e_s).map(|((t, a), e)| -t + a + e).collect();
    grad.push(family.log_partition(target)? + d_lambda2 + e_n);
    Ok(grad)
}

/// Exact aggregate statistics of a concrete set of examples.
pub fn aggregate(family: &dyn ConjugateFamily, items: &[Item]) -> Result<AggregateStats> {
    let mut stats = AggregateStats::empty(family.stat_dim());
    for item in items {
        let t = family.sufficient_stats(item)?;
        for (acc, v) in stats.s.iter_mut().zip(t) {
            *acc += v;
        }
        stats.n += 1.0;
    }
    Ok(stats)
}
