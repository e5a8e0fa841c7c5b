//! Step 2: turning aggregate statistics back into concrete examples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::expfam::{aggregate, ExampleDomain, Item};
use crate::models::{items_from_counts, sample_point, NiwStats, NiwTarget};
use crate::numerics::{dot, SymMatrix};

use super::{round_discrete, Learner, SolverOptions};

/// Residual below which an unpacked continuous set counts as exact.
pub const UNPACK_TOL: f64 = 1e-6;

const STOP_RESIDUAL: f64 = 1e-11;
const MAX_DESCENT_ITERS: usize = 50_000;

/// A concrete teaching set; `n` is the number of items.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TeachingSet {
    pub items: Vec<Item>,
}

impl TeachingSet {
    pub fn new(items: Vec<Item>) -> Self {
        Self { items }
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items as points, for vector-valued examples.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.items
            .iter()
            .map(|it| match it {
                Item::Vector(v) => v.clone(),
                Item::Real(x) => vec![*x],
                Item::Count(c) => vec![*c as f64],
                Item::Category(k) => vec![*k as f64],
            })
            .collect()
    }
}

/// Result of unpacking. `within_tolerance` is false when the best restart
/// still misses the statistics by more than [`UNPACK_TOL`]. With `n = 0` the
/// set is empty whatever `s` is, and the residual is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unpacked {
    pub set: TeachingSet,
    pub residual: f64,
    pub within_tolerance: bool,
    pub restarts: usize,
}

impl Unpacked {
    fn exact(set: TeachingSet, residual: f64) -> Self {
        Self { within_tolerance: residual <= UNPACK_TOL, set, residual, restarts: 0 }
    }
}

/// Unpacks `(n, s[, S])` into `n` examples.
///
/// Scalar models with `T(x) = x` split `s` evenly (Poisson rounds the total and
/// hands out the remainder one unit at a time); categorical models emit the
/// rounded counts; NIW runs gradient descent on the squared statistic mismatch
/// from iid target draws, with restarts.
pub fn unpack(
    learner: &Learner<'_>,
    n: u64,
    s: &[f64],
    big_s: Option<&SymMatrix>,
    opts: &SolverOptions,
) -> Result<Unpacked> {
    match learner {
        Learner::Niw { target, .. } => {
            let big_s = big_s.ok_or_else(|| crate::error::domain("NIW unpacking needs the scatter matrix S"))?;
            Ok(unpack_gaussian(target, n, s, big_s, opts))
        }
        Learner::Family { .. } if n == 0 => Ok(Unpacked::exact(TeachingSet::default(), 0.0)),
        Learner::Family { family, .. } => {
            let set = match family.example_domain() {
                ExampleDomain::Category { .. } => {
                    let counts = round_discrete(s, Some(n));
                    TeachingSet::new(items_from_counts(&counts))
                }
                ExampleDomain::NonNegativeInteger => {
                    let total = s[0].max(0.0).round_ties_even() as u64;
                    TeachingSet::new(split_integer(total, n).into_iter().map(Item::Count).collect())
                }
                ExampleDomain::Real | ExampleDomain::PositiveReal if n > 0 => {
                    TeachingSet::new(vec![Item::Real(s[0] / n as f64); n as usize])
                }
                _ => TeachingSet::default(),
            };
            let got = aggregate(*family, &set.items)?;
            let residual = got.s.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            Ok(Unpacked::exact(set, residual))
        }
    }
}

/// `total` split into `n` nonnegative integers differing by at most one,
/// larger parts first.
pub fn split_integer(total: u64, n: u64) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let (q, r) = (total / n, total % n);
    (0..n).map(|i| if i < r { q + 1 } else { q }).collect()
}

/// `(r_s, R)` with `r_s = s − Σx` and `R = S − Σxxᵀ` (row-major).
fn mismatch(points: &[f64], d: usize, s: &[f64], big_s: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut r = s.to_vec();
    let mut big_r = big_s.as_slice().to_vec();
    for x in points.chunks(d) {
        for i in 0..d {
            r[i] -= x[i];
            for j in 0..d {
                big_r[i * d + j] -= x[i] * x[j];
            }
        }
    }
    (r, big_r)
}

fn residual_sq(points: &[f64], d: usize, s: &[f64], big_s: &SymMatrix) -> f64 {
    let (r, big_r) = mismatch(points, d, s, big_s);
    dot(&r, &r) + dot(&big_r, &big_r)
}

/// Gradient of the squared mismatch with respect to each point:
/// `−2 r_s − 4 R x_j`.
fn residual_grad(points: &[f64], d: usize, s: &[f64], big_s: &SymMatrix) -> Vec<f64> {
    let (r, big_r) = mismatch(points, d, s, big_s);
    let mut g = Vec::with_capacity(points.len());
    for x in points.chunks(d) {
        for i in 0..d {
            let rx: f64 = (0..d).map(|j| big_r[i * d + j] * x[j]).sum();
            g.push(-2.0 * r[i] - 4.0 * rx);
        }
    }
    g
}

fn descend(mut x: Vec<f64>, d: usize, s: &[f64], big_s: &SymMatrix, opts: &SolverOptions) -> (Vec<f64>, f64) {
    let mut f = residual_sq(&x, d, s, big_s);
    let mut g = residual_grad(&x, d, s, big_s);
    let mut step = 1e-3;
    for _ in 0..MAX_DESCENT_ITERS {
        if f.sqrt() <= STOP_RESIDUAL {
            break;
        }
        let gg = dot(&g, &g);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let fy = residual_sq(&y, d, s, big_s);
            if fy <= f - opts.armijo_c * t * gg {
                accepted = Some((y, fy));
                break;
            }
            t *= opts.backtrack_factor;
        }
        let Some((y, fy)) = accepted else { break };
        let gy = residual_grad(&y, d, s, big_s);
        let dx: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&dx, &dg);
        step = if sy > 0.0 { (dot(&dx, &dx) / sy).clamp(1e-12, 1e6) } else { 1e-3 };
        x = y;
        f = fy;
        g = gy;
    }
    (x, f.sqrt())
}

/// Points `x₁ … x_n ∈ R^D` with `Σx ≈ s` and `Σxxᵀ ≈ S`. Restart `r` starts
/// from iid target draws on the ChaCha stream `(seed, r)`; the first restart
/// to reach the stopping residual wins, otherwise the smallest residual does.
pub fn unpack_gaussian(target: &NiwTarget, n: u64, s: &[f64], big_s: &SymMatrix, opts: &SolverOptions) -> Unpacked {
    let d = s.len();
    if n == 0 {
        return Unpacked::exact(TeachingSet::default(), 0.0);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut restarts = 0;
    for r in 0..opts.unpack_restarts.max(1) {
        restarts = r + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let x0: Vec<f64> = (0..n).flat_map(|_| sample_point(target, &mut rng)).collect();
        let (x, res) = descend(x0, d, s, big_s, opts);
        if best.as_ref().is_none_or(|(_, b)| res < *b) {
            best = Some((x, res));
        }
        if res <= STOP_RESIDUAL {
            break;
        }
    }
    let (x, residual) = best.expect("at least one restart");
    let items = x.chunks(d).map(|p| Item::Vector(p.to_vec())).collect();
    log::debug!("unpacked {n} points with residual {residual:e} after {restarts} restarts");
    Unpacked { set: TeachingSet::new(items), residual, within_tolerance: residual <= UNPACK_TOL, restarts }
}

/// Exact NIW statistics of a vector teaching set.
pub fn niw_stats_of(d: usize, set: &TeachingSet) -> Result<NiwStats> {
    NiwStats::from_points(d, &set.points())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_split() {
        assert_eq!(split_integer(7, 3), vec![3, 2, 2]);
        assert_eq!(split_integer(0, 1), vec![0]);
        assert_eq!(split_integer(5, 0), Vec::<u64>::new());
    }

    #[test]
    fn univariate_scatter_target() {
        // Σx = 3, Σx² = 5 with three points, e.g. {0, 1, 2}.
        let target = NiwTarget::new(vec![0.0], SymMatrix::identity(1)).unwrap();
        let out = unpack_gaussian(&target, 3, &[3.0], &SymMatrix::diag(&[5.0]), &SolverOptions::default());
        assert!(out.within_tolerance, "residual {}", out.residual);
        let xs: Vec<f64> = out.set.points().into_iter().map(|p| p[0]).collect();
        assert!((xs.iter().sum::<f64>() - 3.0).abs() < 1e-6);
        assert!((xs.iter().map(|x| x * x).sum::<f64>() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_points() {
        let target = NiwTarget::new(vec![0.0, 0.0], SymMatrix::identity(2)).unwrap();
        let big_s = SymMatrix::from_rows(&[vec![4.0, 0.5], vec![0.5, 3.0]]).unwrap();
        let opts = SolverOptions { seed: 11, ..SolverOptions::default() };
        let a = unpack_gaussian(&target, 4, &[1.0, -1.0], &big_s, &opts);
        let b = unpack_gaussian(&target, 4, &[1.0, -1.0], &big_s, &opts);
        assert_eq!(a, b);
    }
}
