//! Teaching-effort functions.
//!
//! Every variant except [`EffortSpec::MinSeparation`] is expressed in the
//! aggregate quantities `(n, s)` and is convex there. `MinSeparation` looks at
//! raw examples and is only usable by the analytic teachers.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Result, TeachError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EffortSpec {
    #[default]
    Zero,
    /// `c · n`
    PerItem { c: f64 },
    /// `wᵀ s`
    LinearInStats { weights: Vec<f64> },
    /// Every example must lie in `[-d, d]`; enforced as a constraint.
    RangeBox { d: f64 },
    /// `c / min_{i≠j} |x_i - x_j|`
    MinSeparation { c: f64 },
}

impl EffortSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EffortSpec::Zero => "zero",
            EffortSpec::PerItem { .. } => "per_item",
            EffortSpec::LinearInStats { .. } => "linear_in_stats",
            EffortSpec::RangeBox { .. } => "range_box",
            EffortSpec::MinSeparation { .. } => "min_separation",
        }
    }

    /// `LinearInStats` with the same weight on every one of `dim` statistics.
    pub fn uniform_linear(weight: f64, dim: usize) -> Self {
        EffortSpec::LinearInStats { weights: vec![weight; dim] }
    }

    pub fn validate(&self, stat_dim: Option<usize>) -> Result<()> {
        let bad = |msg: String| Err(TeachError::InvalidScenario(msg));
        match self {
            EffortSpec::Zero => Ok(()),
            EffortSpec::PerItem { c } | EffortSpec::MinSeparation { c } => {
                if c.is_finite() && *c > 0.0 {
                    Ok(())
                } else {
                    bad(format!("{} effort needs c > 0, got {c}", self.name()))
                }
            }
            EffortSpec::RangeBox { d } => {
                if d.is_finite() && *d > 0.0 {
                    Ok(())
                } else {
                    bad(format!("range_box effort needs d > 0, got {d}"))
                }
            }
            EffortSpec::LinearInStats { weights } => {
                if let Some(dim) = stat_dim {
                    check_dim(dim, weights.len())?;
                }
                if weights.iter().all(|w| w.is_finite() && *w >= 0.0) {
                    Ok(())
                } else {
                    bad("linear_in_stats weights must be finite and nonnegative".into())
                }
            }
        }
    }

    /// Effort at aggregate statistics. `RangeBox` is 0 inside the feasible
    /// box `|s_j| ≤ d·n` and `+∞` outside it.
    pub fn value(&self, n: f64, s: &[f64]) -> Result<f64> {
        if !(n >= 0.0) {
            return Err(domain(format!("effort needs n >= 0, got {n}")));
        }
        match self {
            EffortSpec::Zero => Ok(0.0),
            EffortSpec::PerItem { c } => Ok(c * n),
            EffortSpec::LinearInStats { weights } => {
                check_dim(weights.len(), s.len())?;
                Ok(weights.iter().zip(s).map(|(w, v)| w * v).sum())
            }
            EffortSpec::RangeBox { d } => {
                let tol = 1e-9 * (1.0 + d * n);
                if s.iter().all(|v| v.abs() <= d * n + tol) {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            EffortSpec::MinSeparation { .. } => Err(TeachError::AnalyticOnly(self.name())),
        }
    }

    /// `(∂/∂n, ∂/∂s)`
    pub fn gradient(&self, n: f64, s: &[f64]) -> Result<(f64, Vec<f64>)> {
        if !(n >= 0.0) {
            return Err(domain(format!("effort needs n >= 0, got {n}")));
        }
        match self {
            EffortSpec::Zero => Ok((0.0, vec![0.0; s.len()])),
            EffortSpec::PerItem { c } => Ok((*c, vec![0.0; s.len()])),
            EffortSpec::LinearInStats { weights } => {
                check_dim(weights.len(), s.len())?;
                Ok((0.0, weights.clone()))
            }
            // The box is a constraint; inside it the effort is flat.
            EffortSpec::RangeBox { .. } => Ok((0.0, vec![0.0; s.len()])),
            EffortSpec::MinSeparation { .. } => Err(TeachError::AnalyticOnly(self.name())),
        }
    }

    /// Effort of a concrete set of scalar examples.
    pub fn value_of_reals(&self, xs: &[f64]) -> Result<f64> {
        let n = xs.len() as f64;
        match self {
            EffortSpec::RangeBox { d } => Ok(if xs.iter().all(|x| x.abs() <= *d) { 0.0 } else { f64::INFINITY }),
            EffortSpec::MinSeparation { c } => {
                let mut sorted = xs.to_vec();
                sorted.sort_by(f64::total_cmp);
                let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                // With fewer than two items the gap is unbounded.
                Ok(if gap.is_finite() { c / gap } else { 0.0 })
            }
            _ => self.value(n, &[xs.iter().sum()]),
        }
    }

    /// Box on each aggregate statistic implied by the effort, if any.
    pub fn stat_box(&self, n: f64) -> Option<f64> {
        match self {
            EffortSpec::RangeBox { d } => Some(d * n.max(0.0)),
            _ => None,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, EffortSpec::MinSeparation { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values() {
        assert!((EffortSpec::PerItem { c: 0.1 }.value(4.0, &[0.0]).unwrap() - 0.4).abs() < 1e-15);
        let lin = EffortSpec::uniform_linear(0.3, 3);
        assert!((lin.value(10.0, &[0.0, 2.0, 8.0]).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(EffortSpec::Zero.value(7.0, &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradients() {
        assert_eq!(EffortSpec::PerItem { c: 0.7 }.gradient(1.0, &[0.0, 0.0]).unwrap(), (0.7, vec![0.0, 0.0]));
        let w = vec![0.1, 0.2];
        assert_eq!(EffortSpec::LinearInStats { weights: w.clone() }.gradient(3.0, &[1.0, 1.0]).unwrap(), (0.0, w));
        assert_eq!(EffortSpec::Zero.gradient(0.0, &[5.0]).unwrap(), (0.0, vec![0.0]));
    }

    #[test]
    fn min_separation_is_analytic_only() {
        let e = EffortSpec::MinSeparation { c: 0.1 };
        assert_eq!(e.value(2.0, &[0.0]), Err(TeachError::AnalyticOnly("min_separation")));
        assert!(e.gradient(2.0, &[0.0]).is_err());
        let v = e.value_of_reals(&[0.45, 0.55]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn range_box() {
        let e = EffortSpec::RangeBox { d: 1.0 };
        assert_eq!(e.value(2.0, &[1.5]).unwrap(), 0.0);
        assert_eq!(e.value(2.0, &[2.5]).unwrap(), f64::INFINITY);
        assert_eq!(e.value_of_reals(&[-1.0, 0.5]).unwrap(), 0.0);
        assert_eq!(e.value_of_reals(&[-1.1]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_negative_n_and_bad_params() {
        assert!(EffortSpec::Zero.value(-1.0, &[]).is_err());
        assert!(EffortSpec::PerItem { c: 0.0 }.validate(None).is_err());
        assert!(EffortSpec::LinearInStats { weights: vec![-1.0] }.validate(Some(1)).is_err());
        assert!(EffortSpec::LinearInStats { weights: vec![1.0] }.validate(Some(2)).is_err());
    }

    #[test]
    fn serde_shape() {
        let e: EffortSpec = toml::from_str("kind = \"per_item\"\nc = 0.1").unwrap();
        assert_eq!(e, EffortSpec::PerItem { c: 0.1 });
        assert!(toml::from_str::<EffortSpec>("kind = \"per_item\"\nc = 0.1\nextra = 1").is_err());
    }

    proptest! {
        #[test]
        fn convex_and_invariant(c in 0.01f64..2.0, n1 in 0.0f64..50.0, n2 in 0.0f64..50.0,
                                s1 in proptest::collection::vec(0.0f64..20.0, 3),
                                s2 in proptest::collection::vec(0.0f64..20.0, 3)) {
            let specs = [
                EffortSpec::Zero,
                EffortSpec::PerItem { c },
                EffortSpec::LinearInStats { weights: vec![c, 2.0 * c, 0.5 * c] },
            ];
            let nm = 0.5 * (n1 + n2);
            let sm: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| 0.5 * (a + b)).collect();
            for e in &specs {
                let mid = e.value(nm, &sm).unwrap();
                let avg = 0.5 * (e.value(n1, &s1).unwrap() + e.value(n2, &s2).unwrap());
                prop_assert!(mid <= avg + 1e-12);
            }
            let per = EffortSpec::PerItem { c };
            prop_assert_eq!(per.value(n1, &s1).unwrap(), per.value(n1, &s2).unwrap());
            let lin = &specs[2];
            prop_assert_eq!(lin.value(n1, &s1).unwrap(), lin.value(n2, &s1).unwrap());
        }
    }
}
