use crate::error::{Result, TeachError};
use crate::numerics::{dot, norm2};

use super::SolverOptions;

/// A smooth objective over a flat variable vector with a projection onto its
/// feasible set.
pub trait Step1Problem {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn project(&self, x: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgdOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_grad_norm: f64,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

const MAX_BACKTRACKS: usize = 80;
const ROUNDING_LEVEL: f64 = 64.0 * f64::EPSILON;

fn projected_step(problem: &dyn Step1Problem, x: &[f64], g: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - t * b).collect();
    problem.project(&mut y)?;
    Ok(y)
}

/// Projected gradient descent with Barzilai–Borwein trial steps and a
/// monotone Armijo backtracking safeguard. Points where the objective is
/// undefined are treated as `+∞`.
pub fn projected_gradient(problem: &dyn Step1Problem, start: Vec<f64>, opts: &SolverOptions) -> Result<PgdOutcome> {
    let mut x = start;
    problem.project(&mut x)?;
    let mut f = problem.value(&x)?;
    if !f.is_finite() {
        return Err(TeachError::Infeasible("objective is not finite at the starting point".into()));
    }
    let mut g = problem.gradient(&x)?;
    let mut trace = vec![f];
    let mut step = opts.init_step;
    let mut pg_norm = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let pg = projected_step(problem, &x, &g, 1.0)?;
        pg_norm = norm2(&x.iter().zip(&pg).map(|(a, b)| a - b).collect::<Vec<_>>());
        if pg_norm <= opts.grad_tol {
            return Ok(PgdOutcome {
                x,
                value: f,
                iterations: iter,
                converged: true,
                projected_grad_norm: pg_norm,
                trace,
            });
        }

        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let y = projected_step(problem, &x, &g, t)?;
            let dx: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            if let Ok(fy) = problem.value(&y) {
                // Strict decrease: at the rounding level of f the Armijo
                // bound alone accepts steps that change nothing.
                if fy.is_finite() && fy < f && fy <= f + opts.armijo_c * dot(&g, &dx) {
                    accepted = Some((y, fy, dx));
                    break;
                }
            }
            t *= opts.backtrack_factor;
        }
        let Some((y, fy, dx)) = accepted else {
            // A stall only counts as convergence when the first-order
            // decrease left is below the objective's rounding level.
            let decrease: f64 = g.iter().zip(&x).zip(&pg).map(|((gi, a), b)| gi * (a - b)).sum();
            let converged = decrease <= ROUNDING_LEVEL * (1.0 + f.abs());
            log::debug!(
                "line search stalled at iteration {iter}, projected gradient {pg_norm:e}, converged {converged}"
            );
            return Ok(PgdOutcome { x, value: f, iterations: iter, converged, projected_grad_norm: pg_norm, trace });
        };

        let gy = problem.gradient(&y)?;
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&dx, &dg);
        step = if sy > 0.0 { (dot(&dx, &dx) / sy).clamp(1e-12, 1e12) } else { opts.init_step };

        x = y;
        f = fy;
        g = gy;
        trace.push(f);
    }
    Ok(PgdOutcome {
        x,
        value: f,
        iterations: opts.max_iters,
        converged: pg_norm <= opts.grad_tol,
        projected_grad_norm: pg_norm,
        trace,
    })
}
