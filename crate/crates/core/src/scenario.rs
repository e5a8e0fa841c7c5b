//! TOML scenario files.
//!
//! Every file names its `model` and carries the model's prior, target and
//! effort. Two keys are shared by all models: an optional `seed` and an
//! optional `[solver]` table overriding [`SolverOptions`]. Unknown keys are
//! rejected.
//!
//! ```toml
//! model = "multinomial"
//! seed = 7
//! prior = { beta = [6.0, 3.0, 1.0] }
//! target = { pi = [0.1, 0.3, 0.6] }
//! effort = { kind = "linear_in_stats", weights = [0.3, 0.3, 0.3] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{NaiveBayesSpec, ThresholdScenario, TwoModelScenario};
use crate::effort::EffortSpec;
use crate::error::{Result, TeachError};
use crate::expfam::{ConjugateFamily, ConjugateHyper, ExampleDomain, Item, NaturalParam};
use crate::models::{
    scalar_model, CrossTerm, GammaPrior, GaussianMean, GaussianMeanPrior, Multinomial, NiwModel, NiwPrior, NiwTarget,
    RidgeBound, ScalarKind,
};
use crate::solver::{Learner, SolverOptions};
use crate::teachdim::ConceptClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanTarget {
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMeanScenario {
    pub sigma2: f64,
    pub prior: GaussianMeanPrior,
    pub target: MeanTarget,
    #[serde(default)]
    pub effort: EffortSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletPrior {
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalTarget {
    pub pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultinomialScenario {
    pub prior: DirichletPrior,
    pub target: CategoricalTarget,
    #[serde(default)]
    pub effort: EffortSpec,
    /// Bound on the total count; required when the effort is zero.
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NiwScenario {
    pub prior: NiwPrior,
    pub target: NiwTarget,
    #[serde(default)]
    pub effort: EffortSpec,
    #[serde(default)]
    pub cross_term: CrossTerm,
    #[serde(default)]
    pub ridge: RidgeBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTarget {
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateScenario {
    pub prior: GammaPrior,
    pub target: RateTarget,
    #[serde(default)]
    pub effort: EffortSpec,
}

/// With `per_item` effort the caller fixes `epsilon`; with `min_separation`
/// the teacher picks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdFile {
    pub theta_star: f64,
    pub effort: EffortSpec,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModelFile {
    pub d: f64,
    pub effort: EffortSpec,
}

/// The class is given inline (`concepts`) or as a path relative to the
/// scenario file (`file`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptClassFile {
    pub concepts: Option<String>,
    pub file: Option<PathBuf>,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelScenario {
    GaussianMean(GaussianMeanScenario),
    Multinomial(MultinomialScenario),
    MvnNiw(NiwScenario),
    Exponential(RateScenario),
    Poisson(RateScenario),
    Threshold(ThresholdFile),
    TwoModel(TwoModelFile),
    NaiveBayes(NaiveBayesSpec),
    ConceptClass(ConceptClassFile),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub model: ModelScenario,
    pub solver: SolverOptions,
    /// Directory of the scenario file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> TeachError {
    TeachError::InvalidScenario(msg.into())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let mut solver: SolverOptions = match table.remove("solver") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| invalid(format!("[solver]: {e}")))?,
            None => SolverOptions::default(),
        };
        if let Some(seed) = table.remove("seed") {
            let seed =
                seed.as_integer().filter(|s| *s >= 0).ok_or_else(|| invalid("seed must be a nonnegative integer"))?;
            solver.seed = seed as u64;
        }
        let model: ModelScenario =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        let sc = Self { model, solver, base_dir: None };
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut sc = Self::from_toml(&text)?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        if let ModelScenario::ConceptClass(_) = sc.model {
            sc.concept_class()?;
        }
        Ok(sc)
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelScenario::GaussianMean(_) => "gaussian_mean",
            ModelScenario::Multinomial(_) => "multinomial",
            ModelScenario::MvnNiw(_) => "mvn_niw",
            ModelScenario::Exponential(_) => "exponential",
            ModelScenario::Poisson(_) => "poisson",
            ModelScenario::Threshold(_) => "threshold",
            ModelScenario::TwoModel(_) => "two_model",
            ModelScenario::NaiveBayes(_) => "naive_bayes",
            ModelScenario::ConceptClass(_) => "concept_class",
        }
    }

    /// Checks parameters, not just shape, so that errors surface before any
    /// computation starts.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        match &self.model {
            ModelScenario::Threshold(t) => {
                self.threshold()?;
                if !(0.0..=1.0).contains(&t.theta_star) {
                    return Err(invalid("theta_star must lie in [0, 1]"));
                }
                Ok(())
            }
            ModelScenario::TwoModel(_) => self.two_model().map(|_| ()),
            ModelScenario::NaiveBayes(spec) => {
                for block in std::iter::once(&spec.classes).chain(&spec.words) {
                    Multinomial::new(block.beta.len())?.hyper(&block.beta)?;
                    block.effort.validate(Some(block.beta.len()))?;
                }
                if spec.words.len() != spec.classes.beta.len() {
                    return Err(invalid("naive_bayes needs one word block per class"));
                }
                Ok(())
            }
            ModelScenario::ConceptClass(c) => match (&c.concepts, &c.file) {
                (Some(_), None) => self.concept_class().map(|_| ()),
                (None, Some(_)) => Ok(()),
                _ => Err(invalid("concept_class needs exactly one of `concepts` or `file`")),
            },
            _ => self.setup().map(|_| ()),
        }
    }

    /// The conjugate learner, for the models that have one.
    pub fn setup(&self) -> Result<Setup> {
        let family = |family: Box<dyn ConjugateFamily>, prior, target, effort: &EffortSpec, cap| {
            effort.validate(Some(1))?;
            Ok(Setup::Family { family, prior, target, effort: effort.clone(), cap })
        };
        match &self.model {
            ModelScenario::GaussianMean(g) => {
                let m = GaussianMean::new(g.sigma2)?;
                let prior = GaussianMeanPrior::new(g.prior.mu0, g.prior.sigma0_2)?.to_hyper(&m);
                let target = m.target(g.target.mu)?;
                family(Box::new(m), prior, target, &g.effort, None)
            }
            ModelScenario::Multinomial(mm) => {
                let m = Multinomial::new(mm.prior.beta.len())?;
                let prior = m.hyper(&mm.prior.beta)?;
                let target = m.target(&mm.target.pi)?;
                mm.effort.validate(Some(mm.prior.beta.len()))?;
                match mm.cap {
                    Some(cap) if !(cap.is_finite() && cap > 0.0) => return Err(invalid("cap must be positive")),
                    None if mm.effort == EffortSpec::Zero => {
                        return Err(invalid("zero effort on a multinomial needs a `cap` on the total count"))
                    }
                    _ => {}
                }
                Ok(Setup::Family { family: Box::new(m), prior, target, effort: mm.effort.clone(), cap: mm.cap })
            }
            ModelScenario::Exponential(r) | ModelScenario::Poisson(r) => {
                let kind = if matches!(self.model, ModelScenario::Exponential(_)) {
                    ScalarKind::Exponential
                } else {
                    ScalarKind::Poisson
                };
                let m = scalar_model(kind);
                let prior = GammaPrior::new(r.prior.alpha, r.prior.beta)?;
                let target = m.target(r.target.rate)?;
                family(Box::new(m), m.hyper(&prior), target, &r.effort, None)
            }
            ModelScenario::MvnNiw(n) => {
                n.prior.validate()?;
                let target = NiwTarget::new(n.target.mu.clone(), n.target.sigma.clone())?;
                if target.mu.len() != n.prior.dim() {
                    return Err(invalid("NIW prior and target dimensions differ"));
                }
                n.effort.validate(Some(n.prior.dim()))?;
                let model = NiwModel::new(n.prior.clone()).with_cross_term(n.cross_term).with_ridge(n.ridge);
                Ok(Setup::Niw { model, target, effort: n.effort.clone() })
            }
            _ => Err(invalid(format!("model `{}` has no conjugate Step-1 learner", self.model_name()))),
        }
    }

    pub fn threshold(&self) -> Result<ThresholdScenario> {
        let ModelScenario::Threshold(t) = &self.model else {
            return Err(invalid("not a threshold scenario"));
        };
        match (&t.effort, t.epsilon) {
            (EffortSpec::PerItem { c }, Some(epsilon)) => {
                Ok(ThresholdScenario { theta_star: t.theta_star, c: *c, epsilon })
            }
            (EffortSpec::MinSeparation { c }, None) => {
                Ok(ThresholdScenario { theta_star: t.theta_star, c: *c, epsilon: *c })
            }
            (EffortSpec::PerItem { .. }, None) => Err(invalid("per_item threshold teaching needs `epsilon`")),
            (EffortSpec::MinSeparation { .. }, Some(_)) => Err(invalid("min_separation picks epsilon itself")),
            (e, _) => Err(invalid(format!("threshold teaching supports per_item or min_separation, not {}", e.name()))),
        }
    }

    pub fn two_model(&self) -> Result<TwoModelScenario> {
        let ModelScenario::TwoModel(t) = &self.model else {
            return Err(invalid("not a two_model scenario"));
        };
        match t.effort {
            EffortSpec::PerItem { c } if c > 0.0 && t.d > 0.0 => Ok(TwoModelScenario { c, d: t.d }),
            _ => Err(invalid("two_model needs d > 0 and per_item effort with c > 0")),
        }
    }

    /// The concept class and the target's index.
    pub fn concept_class(&self) -> Result<(ConceptClass, usize)> {
        let ModelScenario::ConceptClass(c) = &self.model else {
            return Err(invalid("not a concept_class scenario"));
        };
        let text = match (&c.concepts, &c.file) {
            (Some(t), None) => t.clone(),
            (None, Some(f)) => {
                let path = match &self.base_dir {
                    Some(dir) if f.is_relative() => dir.join(f),
                    _ => f.clone(),
                };
                std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            _ => return Err(invalid("concept_class needs exactly one of `concepts` or `file`")),
        };
        let cc = ConceptClass::parse(&text)?;
        let target = cc.find(&c.target).ok_or_else(|| invalid(format!("unknown target concept `{}`", c.target)))?;
        Ok((cc, target))
    }
}

/// Owned conjugate learner built from a scenario.
#[derive(Debug)]
pub enum Setup {
    Family {
        family: Box<dyn ConjugateFamily>,
        prior: ConjugateHyper,
        target: NaturalParam,
        effort: EffortSpec,
        cap: Option<f64>,
    },
    Niw {
        model: NiwModel,
        target: NiwTarget,
        effort: EffortSpec,
    },
}

impl Setup {
    pub fn learner(&self) -> Learner<'_> {
        match self {
            Setup::Family { family, prior, target, effort, cap } => {
                Learner::Family { family: family.as_ref(), prior, target, effort, cap: *cap }
            }
            Setup::Niw { model, target, effort } => Learner::Niw { model, target, effort },
        }
    }

    pub fn example_domain(&self) -> ExampleDomain {
        match self {
            Setup::Family { family, .. } => family.example_domain(),
            Setup::Niw { model, .. } => ExampleDomain::Vector { dim: model.dim() },
        }
    }

    /// One example from its numeric fields, as written in a teaching-set CSV.
    pub fn item_from_fields(&self, fields: &[f64]) -> Result<Item> {
        let bad = || invalid(format!("cannot read {fields:?} as a {:?} example", self.example_domain()));
        let whole = |v: f64| v >= 0.0 && v.fract() == 0.0;
        match (self.example_domain(), fields) {
            (ExampleDomain::Real | ExampleDomain::PositiveReal, [x]) => Ok(Item::Real(*x)),
            (ExampleDomain::NonNegativeInteger, [x]) if whole(*x) => Ok(Item::Count(*x as u64)),
            (ExampleDomain::Category { k }, [x]) if whole(*x) && (*x as usize) < k => Ok(Item::Category(*x as usize)),
            (ExampleDomain::Vector { dim }, v) if v.len() == dim => Ok(Item::Vector(v.to_vec())),
            _ => Err(bad()),
        }
    }
}
