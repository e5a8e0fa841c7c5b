//! Algorithm orchestration: relaxed Step-1 solve, integerization, unpacking.

mod pgd;
mod problems;
mod unpack;

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{Result, TeachError};
use crate::expfam::{step1_objective, AggregateStats, ConjugateFamily, ConjugateHyper, ExampleDomain, NaturalParam};
use crate::models::{niw_step1_objective, NiwModel, NiwStats, NiwTarget};
use crate::numerics::SymMatrix;

pub use pgd::{projected_gradient, PgdOutcome, Step1Problem};
pub use problems::{project_capped_simplex, project_range_cone, FamilyProblem, NiwProblem};
pub use unpack::{niw_stats_of, split_integer, unpack, unpack_gaussian, TeachingSet, Unpacked, UNPACK_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub init_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub seed: u64,
    pub unpack_restarts: usize,
    pub integer_neighborhood: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            grad_tol: 1e-8,
            init_step: 1.0,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            seed: 0,
            unpack_restarts: 5,
            integer_neighborhood: 2,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.init_step > 0.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.unpack_restarts > 0
            && self.integer_neighborhood > 0;
        if ok {
            Ok(())
        } else {
            Err(TeachError::InvalidScenario(format!("invalid solver options: {self:?}")))
        }
    }
}

/// The learner being taught, borrowed from a scenario.
#[derive(Debug, Clone, Copy)]
pub enum Learner<'a> {
    Family {
        family: &'a dyn ConjugateFamily,
        prior: &'a ConjugateHyper,
        target: &'a NaturalParam,
        effort: &'a EffortSpec,
        /// Bound on `Σ s` for categorical blocks.
        cap: Option<f64>,
    },
    Niw {
        model: &'a NiwModel,
        target: &'a NiwTarget,
        effort: &'a EffortSpec,
    },
}

impl Learner<'_> {
    pub fn effort(&self) -> &EffortSpec {
        match self {
            Learner::Family { effort, .. } | Learner::Niw { effort, .. } => effort,
        }
    }

    fn tied(&self) -> bool {
        match self {
            Learner::Family { family, .. } => family.tied_cardinality(&vec![0.0; family.stat_dim()]).is_some(),
            Learner::Niw { .. } => false,
        }
    }

    /// Step-1 objective at `(n, s[, S])`.
    pub fn objective(&self, n: f64, s: &[f64], big_s: Option<&SymMatrix>) -> Result<f64> {
        match self {
            Learner::Family { family, prior, target, effort, .. } => {
                step1_objective(*family, prior, target, effort, &AggregateStats::new(n, s.to_vec()))
            }
            Learner::Niw { model, target, effort } => {
                let big_s = big_s.cloned().unwrap_or_else(|| SymMatrix::zeros(model.dim()));
                niw_step1_objective(model, target, effort, &NiwStats { n, s: s.to_vec(), big_s })
            }
        }
    }
}

/// Relaxed and integer Step-1 optima. The integer point re-minimizes the
/// statistics at the chosen integer `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step1Solution {
    pub n_relaxed: f64,
    pub s_relaxed: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_s_relaxed: Option<SymMatrix>,
    pub objective_relaxed: f64,
    pub n_int: u64,
    pub s: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_s: Option<SymMatrix>,
    pub objective_at_opt: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Integer candidates `max(0, ⌊n⌋ − k) ..= max(0, ⌈n⌉ + k)`.
pub fn integer_candidates(n_relaxed: f64, k: u64) -> RangeInclusive<u64> {
    let k = k as f64;
    let lo = (n_relaxed.floor() - k).max(0.0) as u64;
    let hi = (n_relaxed.ceil() + k).max(0.0) as u64;
    lo..=hi
}

/// Integer `n` near `n_relaxed` with the smallest objective; ties go to the
/// smaller `n`, and undefined values lose to everything.
pub fn integerize_n(mut objective_at: impl FnMut(u64) -> f64, n_relaxed: f64, k: u64) -> u64 {
    let mut best = (u64::MAX, f64::INFINITY);
    for n in integer_candidates(n_relaxed, k) {
        let v = objective_at(n);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.0 == u64::MAX || v < best.1 {
            best = (n, v);
        }
    }
    best.0
}

/// Componentwise round-half-to-even, then a largest-remainder repair so the
/// total equals `n_constraint` when given.
pub fn round_discrete(s: &[f64], n_constraint: Option<u64>) -> Vec<u64> {
    let mut out: Vec<u64> = s.iter().map(|v| v.max(0.0).round_ties_even() as u64).collect();
    let Some(n) = n_constraint else { return out };
    let total: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..s.len()).collect();
    if total < n {
        order.sort_by(|&a, &b| (s[b] - out[b] as f64).total_cmp(&(s[a] - out[a] as f64)).then(a.cmp(&b)));
        for i in 0..(n - total) as usize {
            out[order[i % order.len()]] += 1;
        }
    } else if total > n {
        let mut excess = total - n;
        while excess > 0 {
            order.sort_by(|&a, &b| (s[a] - out[a] as f64).total_cmp(&(s[b] - out[b] as f64)).then(a.cmp(&b)));
            let i = *order.iter().find(|&&i| out[i] > 0).expect("positive total");
            out[i] -= 1;
            excess -= 1;
        }
    }
    out
}

/// Best-improvement search over integer vectors moving each coordinate by at
/// most one per step (all `3^K − 1` moves for `K ≤ 8`, single-coordinate moves
/// beyond that).
pub fn integer_local_search(f: impl Fn(&[u64]) -> f64, start: Vec<u64>) -> Vec<u64> {
    let k = start.len();
    let eval = |c: &[u64]| {
        let v = f(c);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let moves: Vec<Vec<i64>> = if k <= 8 {
        (0..3usize.pow(k as u32))
            .map(|mut code| {
                (0..k)
                    .map(|_| {
                        let m = (code % 3) as i64 - 1;
                        code /= 3;
                        m
                    })
                    .collect()
            })
            .filter(|m: &Vec<i64>| m.iter().any(|v| *v != 0))
            .collect()
    } else {
        (0..k).flat_map(|i| [-1i64, 1].map(|d| (0..k).map(|j| if j == i { d } else { 0 }).collect())).collect()
    };
    let mut cur = start;
    let mut cur_v = eval(&cur);
    for _ in 0..100_000 {
        let mut best: Option<(Vec<u64>, f64)> = None;
        for m in &moves {
            if cur.iter().zip(m).any(|(c, d)| (*c as i64) + d < 0) {
                continue;
            }
            let cand: Vec<u64> = cur.iter().zip(m).map(|(c, d)| ((*c as i64) + d) as u64).collect();
            let v = eval(&cand);
            if v < best.as_ref().map_or(cur_v, |b| b.1) {
                best = Some((cand, v));
            }
        }
        match best {
            Some((c, v)) => {
                cur = c;
                cur_v = v;
            }
            None => break,
        }
    }
    cur
}

fn check_effort(effort: &EffortSpec) -> Result<()> {
    if !effort.is_differentiable() {
        return Err(TeachError::AnalyticOnly(effort.name()));
    }
    effort.validate(None)
}

/// Step 1: minimize the relaxed objective over `(n, s)` (and `S` for NIW),
/// then pick the integer `n` by comparing re-minimized objectives around the
/// relaxed optimum. Categorical models round the counts and repair them with
/// an integer local search instead.
pub fn solve_step1(learner: &Learner<'_>, opts: &SolverOptions) -> Result<Step1Solution> {
    opts.validate()?;
    check_effort(learner.effort())?;
    match *learner {
        Learner::Family { family, prior, target, effort, cap } => {
            let relaxed_problem = FamilyProblem { family, prior, target, effort, fixed_n: None, cap };
            let relaxed = projected_gradient(&relaxed_problem, relaxed_problem.start(), opts)?;
            let relaxed_stats = relaxed_problem.stats(&relaxed.x);
            let mut sol = Step1Solution {
                n_relaxed: relaxed_stats.n,
                s_relaxed: relaxed_stats.s.clone(),
                big_s_relaxed: None,
                objective_relaxed: relaxed.value,
                n_int: 0,
                s: Vec::new(),
                big_s: None,
                objective_at_opt: f64::NAN,
                iterations: relaxed.iterations,
                converged: relaxed.converged,
                trace: relaxed.trace,
            };
            if learner.tied() {
                let f = |c: &[u64]| {
                    let s: Vec<f64> = c.iter().map(|v| *v as f64).collect();
                    if cap.is_some_and(|cap| s.iter().sum::<f64>() > cap + 1e-9) {
                        return f64::INFINITY;
                    }
                    learner.objective(s.iter().sum(), &s, None).unwrap_or(f64::INFINITY)
                };
                let counts = integer_local_search(f, round_discrete(&relaxed_stats.s, None));
                sol.s = counts.iter().map(|v| *v as f64).collect();
                sol.n_int = counts.iter().sum();
                sol.objective_at_opt = learner.objective(sol.n_int as f64, &sol.s, None)?;
                return Ok(sol);
            }
            let mut fixed = Vec::new();
            for n in integer_candidates(relaxed_stats.n, opts.integer_neighborhood) {
                let p = FamilyProblem { family, prior, target, effort, fixed_n: Some(n as f64), cap };
                // At n = 0 the statistics stay free, as in the relaxation.
                let scale = if relaxed_stats.n > 0.0 { n as f64 / relaxed_stats.n } else { 1.0 };
                let start: Vec<f64> = relaxed_stats.s.iter().map(|v| v * scale).collect();
                let mut out = projected_gradient(&p, start, opts)?;
                if family.example_domain() == ExampleDomain::NonNegativeInteger {
                    round_counts_at(&p, &mut out);
                }
                fixed.push((n, out));
            }
            let n_int = integerize_n(|n| lookup(&fixed, n).value, relaxed_stats.n, opts.integer_neighborhood);
            let best = lookup(&fixed, n_int);
            sol.n_int = n_int;
            sol.s = best.x.clone();
            sol.objective_at_opt = best.value;
            sol.converged &= best.converged;
            Ok(sol)
        }
        Learner::Niw { model, target, effort } => {
            let relaxed_problem = NiwProblem { model, target, effort, fixed_n: None };
            let relaxed = projected_gradient(&relaxed_problem, relaxed_problem.start(), opts)?;
            let rs = relaxed_problem.stats(&relaxed.x)?;
            let mut fixed = Vec::new();
            for n in integer_candidates(rs.n, opts.integer_neighborhood) {
                let p = NiwProblem { model, target, effort, fixed_n: Some(n as f64) };
                let out = if n == 0 {
                    let x = p.pack(&NiwStats::empty(model.dim()));
                    let v = p.value(&x).unwrap_or(f64::INFINITY);
                    PgdOutcome { x, value: v, iterations: 0, converged: true, projected_grad_norm: 0.0, trace: vec![v] }
                } else {
                    projected_gradient(&p, p.start(), opts)?
                };
                fixed.push((n, out));
            }
            let n_int = integerize_n(|n| lookup(&fixed, n).value, rs.n, opts.integer_neighborhood);
            let best = lookup(&fixed, n_int);
            let bs = NiwProblem { model, target, effort, fixed_n: Some(n_int as f64) }.stats(&best.x)?;
            Ok(Step1Solution {
                n_relaxed: rs.n,
                s_relaxed: rs.s,
                big_s_relaxed: Some(rs.big_s),
                objective_relaxed: relaxed.value,
                n_int,
                s: bs.s,
                big_s: Some(bs.big_s),
                objective_at_opt: best.value,
                iterations: relaxed.iterations,
                converged: relaxed.converged && best.converged,
                trace: relaxed.trace,
            })
        }
    }
}

/// Integer-valued examples have integer statistics: keep whichever of
/// `⌊s⌋`, `⌈s⌉` is better, coordinate by coordinate.
fn round_counts_at(p: &FamilyProblem<'_>, out: &mut PgdOutcome) {
    for j in 0..out.x.len() {
        let mut best = (f64::INFINITY, out.x[j]);
        for v in [out.x[j].floor(), out.x[j].ceil()] {
            let mut x = out.x.clone();
            x[j] = v.max(0.0);
            let value = p.value(&x).unwrap_or(f64::INFINITY);
            if value < best.0 {
                best = (value, x[j]);
            }
        }
        out.x[j] = best.1;
        out.value = best.0;
    }
}

fn lookup(fixed: &[(u64, PgdOutcome)], n: u64) -> &PgdOutcome {
    &fixed.iter().find(|(m, _)| *m == n).expect("candidate was evaluated").1
}
