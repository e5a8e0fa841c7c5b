use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{domain, Result};
use crate::expfam::{
    step1_objective, AggregateStats, ConjugateFamily, ConjugateHyper, ExampleDomain, Item, NaturalParam,
};
use crate::numerics::{digamma, log_gamma};

/// Categorical observations over `k` categories with a Dirichlet prior.
///
/// All `k` counts are carried as statistics (`T(x)` is one-hot), `θ = ln π`,
/// and the prior is `λ₁ = β − 1`. On the simplex `A(θ) = 0`, so `λ₂` plays no
/// role and the cardinality is tied to the statistics: `n = Σ s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multinomial {
    pub k: usize,
}

impl Multinomial {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(domain(format!("multinomial needs at least 2 categories, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn hyper(&self, beta: &[f64]) -> Result<ConjugateHyper> {
        if beta.len() != self.k || beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(domain("Dirichlet prior needs k positive concentrations"));
        }
        Ok(ConjugateHyper { lambda1: beta.iter().map(|b| b - 1.0).collect(), lambda2: 0.0 })
    }

    /// Target on the open simplex.
    pub fn target(&self, pi: &[f64]) -> Result<NaturalParam> {
        if pi.len() != self.k || pi.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(domain("target probabilities must be k positive values"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain(format!("target probabilities sum to {total}, not 1")));
        }
        NaturalParam::new(pi.iter().map(|p| p.ln()).collect())
    }

    pub fn probabilities(&self, theta: &NaturalParam) -> Vec<f64> {
        theta.as_slice().iter().map(|t| t.exp()).collect()
    }
}

impl ConjugateFamily for Multinomial {
    fn stat_dim(&self) -> usize {
        self.k
    }

    fn example_domain(&self) -> ExampleDomain {
        ExampleDomain::Category { k: self.k }
    }

    fn sufficient_stats(&self, item: &Item) -> Result<Vec<f64>> {
        let idx = match item {
            Item::Category(c) => *c,
            Item::Count(c) => *c as usize,
            other => return Err(domain(format!("multinomial expects a category, got {other:?}"))),
        };
        if idx >= self.k {
            return Err(domain(format!("category {idx} out of range for k = {}", self.k)));
        }
        let mut t = vec![0.0; self.k];
        t[idx] = 1.0;
        Ok(t)
    }

    fn log_partition(&self, theta: &NaturalParam) -> Result<f64> {
        let total: f64 = theta.as_slice().iter().map(|t| t.exp()).sum();
        Ok(total.ln())
    }

    fn hyper_in_domain(&self, hyper: &ConjugateHyper) -> bool {
        hyper.lambda1.len() == self.k && hyper.lambda1.iter().all(|l| *l > -1.0 && l.is_finite())
    }

    fn prior_log_partition(&self, hyper: &ConjugateHyper) -> Result<f64> {
        let mut total = 0.0;
        let mut acc = 0.0;
        for l in &hyper.lambda1 {
            let a = l + 1.0;
            total += a;
            acc += log_gamma(a)?;
        }
        Ok(acc - log_gamma(total)?)
    }

    fn prior_log_partition_grad(&self, hyper: &ConjugateHyper) -> Result<(Vec<f64>, f64)> {
        let total: f64 = hyper.lambda1.iter().map(|l| l + 1.0).sum();
        let psi_total = digamma(total)?;
        let grad = hyper.lambda1.iter().map(|l| digamma(l + 1.0).map(|v| v - psi_total)).collect::<Result<Vec<_>>>()?;
        Ok((grad, 0.0))
    }

    fn tied_cardinality(&self, s: &[f64]) -> Option<f64> {
        Some(s.iter().sum())
    }

    fn stat_lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn sample(&self, theta: &NaturalParam, rng: &mut dyn RngCore) -> Item {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, t) in theta.as_slice().iter().enumerate() {
            acc += t.exp();
            if u < acc {
                return Item::Category(i);
            }
        }
        Item::Category(self.k - 1)
    }

    fn ti_offset(&self, _theta: &NaturalParam) -> f64 {
        0.0
    }
}

/// Negative log Dirichlet density at `π*` with parameters `β + s`, plus effort
/// evaluated at `n = Σ s`.
pub fn multinomial_step1_objective(
    model: &Multinomial,
    beta: &[f64],
    pi_star: &[f64],
    effort: &EffortSpec,
    s: &[f64],
) -> Result<f64> {
    if s.iter().any(|v| *v < 0.0) {
        return Err(domain("multinomial counts must be nonnegative"));
    }
    let stats = AggregateStats::new(s.iter().sum(), s.to_vec());
    step1_objective(model, &model.hyper(beta)?, &model.target(pi_star)?, effort, &stats)
}

/// Category counts of a teaching set.
pub fn counts_of(model: &Multinomial, items: &[Item]) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; model.k];
    for item in items {
        let t = model.sufficient_stats(item)?;
        let idx = t.iter().position(|v| *v == 1.0).expect("one-hot");
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Teaching set listing each category as many times as its count.
pub fn items_from_counts(counts: &[u64]) -> Vec<Item> {
    counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(Item::Category(k), c as usize)).collect()
}
