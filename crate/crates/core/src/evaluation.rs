//! Teaching Impedance of concrete teaching sets and random-teaching baselines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::effort::EffortSpec;
use crate::error::{domain, Result, TeachError};
use crate::expfam::{aggregate, step1_objective, ExampleDomain, Item};
use crate::models::{niw_step1_objective, sample_moments, sample_point, NiwStats};
use crate::numerics::SymMatrix;
use crate::solver::{Learner, TeachingSet};

/// `ti = loss_term + effort_term`, where the loss is `−log p(θ*|D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TIReport {
    pub ti: f64,
    pub loss_term: f64,
    pub effort_term: f64,
    /// Whether the loss includes the data-independent part of the density.
    pub constant_included: bool,
}

impl TIReport {
    fn new(loss_term: f64, effort_term: f64) -> Self {
        Self { ti: loss_term + effort_term, loss_term, effort_term, constant_included: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineStats {
    pub trials: usize,
    pub n: u64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub seed: u64,
}

impl BaselineStats {
    pub fn from_values(values: &[f64], n: u64, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("baseline needs at least one trial"));
        }
        let len = values.len() as f64;
        let mean = values.iter().sum::<f64>() / len;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
        Ok(Self {
            trials: values.len(),
            n,
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            seed,
        })
    }
}

/// Effort of concrete items. Box constraints are checked per example rather
/// than on the sums.
fn effort_of_items(effort: &EffortSpec, n: f64, s: &[f64], items: &[Item]) -> Result<f64> {
    match effort {
        EffortSpec::RangeBox { d } => {
            let inside = items.iter().all(|it| match it {
                Item::Real(x) => x.abs() <= *d,
                Item::Vector(v) => v.iter().all(|x| x.abs() <= *d),
                Item::Count(c) => *c as f64 <= *d,
                Item::Category(_) => true,
            });
            Ok(if inside { 0.0 } else { f64::INFINITY })
        }
        EffortSpec::MinSeparation { .. } => {
            let xs = items
                .iter()
                .map(|it| match it {
                    Item::Real(x) => Ok(*x),
                    _ => Err(domain("min_separation effort needs scalar examples")),
                })
                .collect::<Result<Vec<f64>>>()?;
            effort.value_of_reals(&xs)
        }
        _ => effort.value(n, s),
    }
}

/// Teaching Impedance of a concrete set, from its exact statistics.
pub fn teaching_impedance(learner: &Learner<'_>, set: &TeachingSet) -> Result<TIReport> {
    match *learner {
        Learner::Family { family, prior, target, effort, .. } => {
            let stats = aggregate(family, &set.items)?;
            let loss = step1_objective(family, prior, target, &EffortSpec::Zero, &stats)? + family.ti_offset(target);
            let effort_term = effort_of_items(effort, stats.n, &stats.s, &set.items)?;
            Ok(TIReport::new(loss, effort_term))
        }
        Learner::Niw { model, target, effort } => {
            let stats = if set.is_empty() {
                NiwStats::empty(model.dim())
            } else {
                NiwStats::from_points(model.dim(), &set.points())?
            };
            // Without the data-independent part of the NIW density.
            let loss = niw_step1_objective(model, target, &EffortSpec::Zero, &stats)?;
            let effort_term = effort_of_items(effort, stats.n, &stats.s, &set.items)?;
            Ok(TIReport { constant_included: false, ..TIReport::new(loss, effort_term) })
        }
    }
}

/// `n` iid draws from the target, on the ChaCha stream `(seed, trial)`.
pub fn random_set(learner: &Learner<'_>, n: u64, seed: u64, trial: u64) -> TeachingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let items = (0..n)
        .map(|_| match *learner {
            Learner::Family { family, target, .. } => family.sample(target, &mut rng),
            Learner::Niw { target, .. } => Item::Vector(sample_point(target, &mut rng)),
        })
        .collect();
    TeachingSet::new(items)
}

/// Monte-Carlo baseline: TI of `trials` random sets of size `n`. Returns the
/// summary and the per-trial values in trial order; the result does not
/// depend on thread scheduling.
pub fn random_baseline(learner: &Learner<'_>, n: u64, trials: usize, seed: u64) -> Result<(BaselineStats, Vec<f64>)> {
    if trials == 0 {
        return Err(domain("baseline needs at least one trial"));
    }
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| teaching_impedance(learner, &random_set(learner, n, seed, t)).map(|r| r.ti))
        .collect::<Result<Vec<f64>>>()?;
    Ok((BaselineStats::from_values(&values, n, seed)?, values))
}

/// Maximum-likelihood estimate from a teaching set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mle {
    /// Category proportions, a rate, or a mean vector.
    pub params: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<SymMatrix>,
}

pub fn mle_of(learner: &Learner<'_>, set: &TeachingSet) -> Result<Mle> {
    if set.is_empty() {
        return Err(TeachError::EmptySet);
    }
    match *learner {
        Learner::Niw { .. } => {
            let (mean, covariance) = sample_moments(&set.points())?;
            Ok(Mle { params: mean, covariance })
        }
        Learner::Family { family, .. } => {
            let stats = aggregate(family, &set.items)?;
            let params = match family.example_domain() {
                ExampleDomain::PositiveReal => vec![stats.n / stats.s[0]],
                ExampleDomain::Vector { .. } => return Err(domain("vector examples need the NIW learner")),
                _ => stats.s.iter().map(|v| v / stats.n).collect(),
            };
            Ok(Mle { params, covariance: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::{ConjugateHyper, NaturalParam};
    use crate::models::{items_from_counts, GaussianMean, GaussianMeanPrior, Multinomial};

    struct Dice {
        model: Multinomial,
        hyper: ConjugateHyper,
        target: NaturalParam,
        effort: EffortSpec,
    }

    impl Dice {
        fn new() -> Self {
            let model = Multinomial::new(3).unwrap();
            Self {
                hyper: model.hyper(&[6.0, 3.0, 1.0]).unwrap(),
                target: model.target(&[0.1, 0.3, 0.6]).unwrap(),
                effort: EffortSpec::uniform_linear(0.3, 3),
                model,
            }
        }

        fn learner(&self) -> Learner<'_> {
            Learner::Family {
                family: &self.model,
                prior: &self.hyper,
                target: &self.target,
                effort: &self.effort,
                cap: None,
            }
        }
    }

    #[test]
    fn reported_impedances() {
        let ex = Dice::new();
        let l = ex.learner();
        let r = teaching_impedance(&l, &TeachingSet::new(items_from_counts(&[0, 2, 8]))).unwrap();
        assert!((r.ti - 2.645_685_961_077_646).abs() < 1e-10);
        assert!((r.ti - 2.65).abs() < 0.01);
        assert!((r.effort_term - 3.0).abs() < 1e-12);
        assert_eq!(r.ti, r.loss_term + r.effort_term);
        assert!(r.constant_included);
        let r = teaching_impedance(&l, &TeachingSet::new(items_from_counts(&[1, 3, 6]))).unwrap();
        assert!((r.ti - 4.506_438_301_792_652).abs() < 1e-10);
    }

    #[test]
    fn gaussian_impedance_is_a_normal_density() {
        // Prior N(1, 1), σ² = 1, one example x = −1: posterior N(0, 1/2).
        let m = GaussianMean::new(1.0).unwrap();
        let hyper = GaussianMeanPrior::new(1.0, 1.0).unwrap().to_hyper(&m);
        let target = m.target(0.0).unwrap();
        let effort = EffortSpec::PerItem { c: 0.1 };
        let l = Learner::Family { family: &m, prior: &hyper, target: &target, effort: &effort, cap: None };
        let r = teaching_impedance(&l, &TeachingSet::new(vec![Item::Real(-1.0)])).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * 0.5).ln() + 0.1;
        assert!((r.ti - expected).abs() < 1e-12);
    }

    #[test]
    fn baseline_is_deterministic() {
        let ex = Dice::new();
        let l = ex.learner();
        let (a, va) = random_baseline(&l, 10, 500, 7).unwrap();
        let (b, vb) = random_baseline(&l, 10, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(va, vb);
        assert!(a.min <= a.mean && a.mean <= a.max && a.std >= 0.0);
        let (c, _) = random_baseline(&l, 10, 500, 8).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn single_trial_baseline() {
        let ex = Dice::new();
        let (b, v) = random_baseline(&ex.learner(), 10, 1, 3).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((b.mean, b.min, b.max, b.std), (v[0], v[0], v[0], 0.0));
        assert!(random_baseline(&ex.learner(), 10, 0, 3).is_err());
    }

    #[test]
    fn mle_examples() {
        let ex = Dice::new();
        let l = ex.learner();
        let big = mle_of(&l, &TeachingSet::new(items_from_counts(&[317, 965, 1933]))).unwrap();
        for (got, want) in big.params.iter().zip([0.0986, 0.3002, 0.6012]) {
            assert!((got - want).abs() < 5e-5, "{got} vs {want}");
        }
        let small = mle_of(&l, &TeachingSet::new(items_from_counts(&[1, 3, 6]))).unwrap();
        for (got, want) in small.params.iter().zip([0.1, 0.3, 0.6]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(mle_of(&l, &TeachingSet::default()), Err(TeachError::EmptySet));
    }

    #[test]
    fn range_box_checks_each_example() {
        let m = GaussianMean::new(1.0).unwrap();
        let hyper = GaussianMeanPrior::new(0.0, 1.0).unwrap().to_hyper(&m);
        let target = m.target(0.0).unwrap();
        let effort = EffortSpec::RangeBox { d: 1.0 };
        let l = Learner::Family { family: &m, prior: &hyper, target: &target, effort: &effort, cap: None };
        // Sum is inside the aggregate box but one example is not.
        let r = teaching_impedance(&l, &TeachingSet::new(vec![Item::Real(1.5), Item::Real(-1.0)])).unwrap();
        assert_eq!(r.effort_term, f64::INFINITY);
    }
}
