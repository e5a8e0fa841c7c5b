//! Closed-form teachers: the 1-D threshold learner, the two-model learner,
//! the Gaussian-mean learner, and a Naive Bayes composer built from
//! independent multinomial blocks.

use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{domain, Result, TeachError};
use crate::expfam::Item;
use crate::models::{optimal_count, optimal_sum_at, GaussianMean, GaussianMeanPrior, Multinomial};
use crate::solver::{solve_step1, split_integer, Learner, SolverOptions, TeachingSet};

/// A labeled point on the line; `label` is `-1` or `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub label: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdScenario {
    pub theta_star: f64,
    pub c: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTeaching {
    pub set: Vec<LabeledPoint>,
    pub epsilon: f64,
    pub ti: f64,
}

fn bracket(theta_star: f64, width: f64) -> Result<Vec<LabeledPoint>> {
    if !(theta_star > 0.0 && theta_star < 1.0) {
        return Err(domain(format!("threshold must lie in (0, 1), got {theta_star}")));
    }
    let (lo, hi) = (theta_star - width / 2.0, theta_star + width / 2.0);
    if !(width > 0.0) || lo < 0.0 || hi > 1.0 {
        return Err(domain(format!("interval [{lo}, {hi}] leaves [0, 1]")));
    }
    Ok(vec![LabeledPoint { x: lo, label: -1 }, LabeledPoint { x: hi, label: 1 }])
}

/// Width of the version space `[max negative, min positive]` for a threshold
/// learner on `[0, 1]` with a uniform prior.
pub fn threshold_version_width(set: &[LabeledPoint]) -> Result<f64> {
    let lo = set.iter().filter(|p| p.label < 0).fold(0.0f64, |m, p| m.max(p.x));
    let hi = set.iter().filter(|p| p.label > 0).fold(1.0f64, |m, p| m.min(p.x));
    if hi < lo {
        return Err(TeachError::EmptyVersionSpace);
    }
    Ok(hi - lo)
}

/// Two points `ε` apart around `θ*`, with per-item cost `c`.
/// `TI = ln ε + 2c`, unbounded below as `ε → 0`.
pub fn teach_threshold(sc: &ThresholdScenario) -> Result<ThresholdTeaching> {
    if !(sc.c > 0.0) {
        return Err(domain("per-item cost must be positive"));
    }
    let set = bracket(sc.theta_star, sc.epsilon)?;
    let width = threshold_version_width(&set)?;
    Ok(ThresholdTeaching { set, epsilon: sc.epsilon, ti: width.ln() + 2.0 * sc.c })
}

/// With effort `c / min gap`, `ln ε + c/ε` is minimized at `ε = c`.
pub fn teach_threshold_minsep(theta_star: f64, c: f64) -> Result<ThresholdTeaching> {
    if !(c > 0.0) {
        return Err(domain("separation cost must be positive"));
    }
    let set = bracket(theta_star, c)?;
    let xs: Vec<f64> = set.iter().map(|p| p.x).collect();
    let effort = EffortSpec::MinSeparation { c }.value_of_reals(&xs)?;
    Ok(ThresholdTeaching { epsilon: c, ti: threshold_version_width(&set)?.ln() + effort, set })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModelScenario {
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoModelTeaching {
    pub n: u64,
    pub set: TeachingSet,
    pub ti: f64,
}

/// `TI(n) = ln(1 + e^{−dn}) + cn` for `n` copies of `−d`.
pub fn two_model_ti(c: f64, d: f64, n: u64) -> f64 {
    (-d * n as f64).exp().ln_1p() + c * n as f64
}

/// Stationary point `(1/d) ln(d/c − 1)`, or `None` when it does not exist.
pub fn two_model_relaxed_n(c: f64, d: f64) -> Option<f64> {
    let r = d / c - 1.0;
    (r > 0.0).then(|| r.ln() / d)
}

/// `max(0, [relaxed n])`, with `[·]` rounding to nearest.
pub fn two_model_formula_n(c: f64, d: f64) -> u64 {
    two_model_relaxed_n(c, d).map_or(0, |n| n.round().max(0.0) as u64)
}

/// Floor or ceiling of the relaxed `n`, whichever has the smaller TI (ties to
/// the smaller `n`). `TI` is convex in `n`, so this is the integer optimum.
pub fn two_model_integer_n(c: f64, d: f64) -> u64 {
    let Some(n) = two_model_relaxed_n(c, d).filter(|n| *n > 0.0) else { return 0 };
    let (lo, hi) = (n.floor() as u64, n.ceil() as u64);
    if two_model_ti(c, d, hi) < two_model_ti(c, d, lo) {
        hi
    } else {
        lo
    }
}

/// Learner picking between `N(−¼, ½)` (the target) and `N(¼, ½)` under an
/// even prior, with items restricted to `[−d, d]`: teach `n` copies of `−d`,
/// with `n` from the rounding formula.
pub fn teach_two_model(sc: &TwoModelScenario) -> Result<TwoModelTeaching> {
    if !(sc.c > 0.0 && sc.d > 0.0) {
        return Err(domain("two-model scenario needs c > 0 and d > 0"));
    }
    let n = if sc.c >= sc.d { 0 } else { two_model_formula_n(sc.c, sc.d) };
    Ok(TwoModelTeaching {
        n,
        set: TeachingSet::new(vec![Item::Real(-sc.d); n as usize]),
        ti: two_model_ti(sc.c, sc.d, n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianClosedForm {
    pub n_relaxed: f64,
    pub n_int: u64,
    pub s: f64,
    pub set: TeachingSet,
}

/// `n = 1/(2c) − σ²/σ₀²`, rounded and clipped at zero; `s` at that `n`; the
/// set is `n` copies of `s/n`.
pub fn gaussian_mean_closed_form(
    mu_star: f64,
    sigma2: f64,
    mu0: f64,
    sigma0_2: f64,
    c: f64,
) -> Result<GaussianClosedForm> {
    let model = GaussianMean::new(sigma2)?;
    let prior = GaussianMeanPrior::new(mu0, sigma0_2)?;
    if !(c > 0.0) {
        return Err(domain("per-item cost must be positive"));
    }
    let n_relaxed = optimal_count(&model, &prior, c);
    let n_int = n_relaxed.round_ties_even().max(0.0) as u64;
    let s = optimal_sum_at(&model, &prior, mu_star, n_int as f64);
    let set = if n_int == 0 {
        TeachingSet::default()
    } else {
        TeachingSet::new(vec![Item::Real(s / n_int as f64); n_int as usize])
    };
    Ok(GaussianClosedForm { n_relaxed, n_int, s, set })
}

/// One multinomial block: Dirichlet prior, target, effort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveBayesBlock {
    pub beta: Vec<f64>,
    pub target: Vec<f64>,
    #[serde(default)]
    pub effort: EffortSpec,
}

/// Class block plus one word block per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveBayesSpec {
    pub classes: NaiveBayesBlock,
    pub words: Vec<NaiveBayesBlock>,
    /// Cap on the total count of every block; needed when effort is zero.
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub label: usize,
    pub words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveBayesTeaching {
    pub class_counts: Vec<u64>,
    pub word_counts: Vec<Vec<u64>>,
    pub documents: Vec<Document>,
    pub converged: bool,
}

/// Integer counts for one block. A one-category block teaches nothing about
/// proportions, so it simply takes the cap.
fn solve_block(block: &NaiveBayesBlock, cap: Option<f64>, opts: &SolverOptions) -> Result<(Vec<u64>, bool)> {
    if block.beta.len() != block.target.len() {
        return Err(TeachError::Dimension { expected: block.beta.len(), got: block.target.len() });
    }
    if block.beta.len() == 1 {
        let cap = cap.ok_or_else(|| TeachError::InvalidScenario("a single-category block needs a cap".into()))?;
        return Ok((vec![cap.floor().max(0.0) as u64], true));
    }
    let model = Multinomial::new(block.beta.len())?;
    let hyper = model.hyper(&block.beta)?;
    let target = model.target(&block.target)?;
    let learner = Learner::Family { family: &model, prior: &hyper, target: &target, effort: &block.effort, cap };
    let sol = solve_step1(&learner, opts)?;
    Ok((sol.s.iter().map(|v| *v as u64).collect(), sol.converged))
}

/// Solves the class block and every word block independently, then writes
/// `n_k` documents for class `k` whose word counts split `m_k` as evenly as
/// possible (per-class totals are exact).
pub fn compose_naive_bayes(spec: &NaiveBayesSpec, opts: &SolverOptions) -> Result<NaiveBayesTeaching> {
    if spec.words.len() != spec.classes.beta.len() {
        return Err(TeachError::Dimension { expected: spec.classes.beta.len(), got: spec.words.len() });
    }
    let (class_counts, mut converged) = solve_block(&spec.classes, spec.cap, opts)?;
    let mut word_counts = Vec::with_capacity(spec.words.len());
    let mut documents = Vec::new();
    for (k, block) in spec.words.iter().enumerate() {
        let (m, ok) = solve_block(block, spec.cap, opts)?;
        converged &= ok;
        let n_k = class_counts[k];
        if n_k > 0 {
            let mut docs = vec![vec![0u64; m.len()]; n_k as usize];
            // Rotate the starting document so remainders spread across documents.
            let mut offset = 0usize;
            for (j, &count) in m.iter().enumerate() {
                for (i, part) in split_integer(count, n_k).into_iter().enumerate() {
                    docs[(i + offset) % n_k as usize][j] = part;
                }
                offset = (offset + (count % n_k) as usize) % n_k as usize;
            }
            documents.extend(docs.into_iter().map(|words| Document { label: k, words }));
        }
        word_counts.push(m);
    }
    Ok(NaiveBayesTeaching { class_counts, word_counts, documents, converged })
}
