//! Step-1 problems for the generic conjugate families and for NIW, laid out
//! as flat vectors for the projected-gradient solver.

use crate::effort::EffortSpec;
use crate::error::Result;
use crate::expfam::{step1_gradient, step1_objective, AggregateStats, ConjugateFamily, ConjugateHyper, NaturalParam};
use crate::models::{niw_step1_gradient, niw_step1_objective, NiwModel, NiwStats, NiwTarget};
use crate::numerics::{project_psd, SymMatrix};

use super::pgd::Step1Problem;

/// Euclidean projection onto `{w ≥ 0, Σ w ≤ cap}`.
pub fn project_capped_simplex(v: &mut [f64], cap: f64) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    if v.iter().sum::<f64>() <= cap {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        acc += u;
        let t = (acc - cap) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
}

/// Euclidean projection of `(s, n)` onto the cone `{|s_j| ≤ d·n, n ≥ 0}`.
pub fn project_range_cone(s: &mut [f64], n: &mut f64, d: f64) {
    let excess = |t: f64| s.iter().map(|v| (v.abs() - d * t).max(0.0)).sum::<f64>();
    // Root of the increasing function t − n − d·excess(t).
    let mut lo = 0.0;
    let mut hi = n.max(0.0) + s.iter().fold(0.0f64, |m, v| m.max(v.abs())) / d + 1.0;
    if -*n - d * excess(0.0) >= 0.0 {
        hi = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - *n - d * excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    *n = hi;
    let bound = d * hi;
    s.iter_mut().for_each(|v| *v = v.clamp(-bound, bound));
}

/// Generic family. Layout: `[s₁ … s_D, n]`, or just `s` when the cardinality
/// is tied to the statistics or fixed.
pub struct FamilyProblem<'a> {
    pub family: &'a dyn ConjugateFamily,
    pub prior: &'a ConjugateHyper,
    pub target: &'a NaturalParam,
    pub effort: &'a EffortSpec,
    pub fixed_n: Option<f64>,
    /// Upper bound on `Σ s`, used to keep zero-effort categorical blocks finite.
    pub cap: Option<f64>,
}

impl FamilyProblem<'_> {
    fn tied(&self) -> bool {
        self.family.tied_cardinality(&vec![0.0; self.family.stat_dim()]).is_some()
    }

    pub fn stats(&self, x: &[f64]) -> AggregateStats {
        let d = self.family.stat_dim();
        let s = x[..d].to_vec();
        let n = match (self.family.tied_cardinality(&s), self.fixed_n) {
            (Some(n), _) => n,
            (None, Some(n)) => n,
            (None, None) => x[d],
        };
        AggregateStats::new(n, s)
    }

    pub fn start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.family.stat_dim()];
        if !self.tied() && self.fixed_n.is_none() {
            x.push(1.0);
        }
        x
    }
}

impl Step1Problem for FamilyProblem<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        step1_objective(self.family, self.prior, self.target, self.effort, &self.stats(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = step1_gradient(self.family, self.prior, self.target, self.effort, &self.stats(x))?;
        let dn = g.pop().expect("gradient has an n component");
        if self.tied() {
            g.iter_mut().for_each(|v| *v += dn);
        } else if self.fixed_n.is_none() {
            g.push(dn);
        }
        Ok(g)
    }

    fn project(&self, x: &mut [f64]) -> Result<()> {
        let d = self.family.stat_dim();
        let (s, rest) = x.split_at_mut(d);
        if let Some(lo) = self.family.stat_lower_bound() {
            s.iter_mut().for_each(|v| *v = v.max(lo));
        }
        if let Some(cap) = self.cap {
            project_capped_simplex(s, cap);
        }
        if let Some(n) = rest.first_mut() {
            *n = n.max(0.0);
        }
        if let EffortSpec::RangeBox { d: bound } = self.effort {
            match (rest.first_mut(), self.fixed_n) {
                (Some(n), _) => project_range_cone(s, n, *bound),
                (None, Some(n)) => s.iter_mut().for_each(|v| *v = v.clamp(-bound * n, bound * n)),
                (None, None) => {
                    let n: f64 = s.iter().sum();
                    s.iter_mut().for_each(|v| *v = v.clamp(-bound * n, bound * n));
                }
            }
        }
        Ok(())
    }
}

/// NIW. Layout: `[s (D), S row-major (D²), n]`, without `n` when fixed. `S`
/// is read through its symmetric part.
pub struct NiwProblem<'a> {
    pub model: &'a NiwModel,
    pub target: &'a NiwTarget,
    pub effort: &'a EffortSpec,
    pub fixed_n: Option<f64>,
}

/// Keeps the lifted diagonal strictly inside the ridge.
const RIDGE_MARGIN: f64 = 1e-10;

impl NiwProblem<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn stats(&self, x: &[f64]) -> Result<NiwStats> {
        let d = self.dim();
        let n = self.fixed_n.unwrap_or_else(|| x[d + d * d]);
        Ok(NiwStats { n, s: x[..d].to_vec(), big_s: SymMatrix::from_row_major(d, &x[d..d + d * d])? })
    }

    pub fn pack(&self, stats: &NiwStats) -> Vec<f64> {
        let mut x = stats.s.clone();
        x.extend_from_slice(stats.big_s.as_slice());
        if self.fixed_n.is_none() {
            x.push(stats.n);
        }
        x
    }

    /// Expected statistics of `D + 1` draws from the target (or of the fixed
    /// count), which lie strictly inside the feasible set.
    pub fn start(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.fixed_n.unwrap_or(d as f64 + 1.0);
        let mu = &self.target.mu;
        let mut scatter = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                scatter[i * d + j] = n * (self.target.sigma.get(i, j) + mu[i] * mu[j]);
            }
        }
        let stats = NiwStats {
            n,
            s: mu.iter().map(|m| n * m).collect(),
            big_s: SymMatrix::from_row_major(d, &scatter).expect("square buffer"),
        };
        self.pack(&stats)
    }
}

impl Step1Problem for NiwProblem<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        niw_step1_objective(self.model, self.target, self.effort, &self.stats(x)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = niw_step1_gradient(self.model, self.target, self.effort, &self.stats(x)?)?;
        let mut out = g.s;
        out.extend_from_slice(g.big_s.as_slice());
        if self.fixed_n.is_none() {
            out.push(g.n);
        }
        Ok(out)
    }

    fn project(&self, x: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let mut stats = self.stats(x)?;
        stats.n = stats.n.max(0.0);
        if stats.n == 0.0 {
            stats = NiwStats::empty(d);
        } else {
            if let EffortSpec::RangeBox { d: bound } = self.effort {
                let b = bound * stats.n;
                stats.s.iter_mut().for_each(|v| *v = v.clamp(-b, b));
            }
            stats.big_s = project_psd(&stats.big_s)?;
            for i in 0..d {
                let floor = self.model.ridge_floor(stats.s[i], stats.n) + RIDGE_MARGIN;
                if stats.big_s.get(i, i) < floor {
                    stats.big_s.set(i, i, floor);
                }
            }
        }
        x.copy_from_slice(&self.pack(&stats));
        Ok(())
    }
}
