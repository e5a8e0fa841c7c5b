//! Multivariate Gaussian with unknown mean and covariance under a
//! Normal-Inverse-Wishart prior.
//!
//! Data enter through `n`, `s = Σ xᵢ` and `S = Σ xᵢxᵢᵀ`. The Step-1 objective is
//! the negative log posterior density at `(μ*, Σ*)` with the normalizer factors
//! that do not depend on the data (`π^{D(D−1)/4}`, `(2π)^{D/2}` and part of the
//! `|Σ*|` power) left out; [`niw_density_offset`] restores them.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::effort::EffortSpec;
use crate::error::{check_dim, domain, Result, TeachError};
use crate::numerics::{digamma_half_sum, dot, log_det_pd, log_gamma_half_sum, SquareMatrix, SymMatrix};

const LN_2: f64 = std::f64::consts::LN_2;
const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How the `μ₀sᵀ` cross term enters `Λ_n`.
///
/// `Symmetric` uses `μ₀sᵀ + sμ₀ᵀ`, which is the exact posterior scatter.
/// `AsPrinted` uses `2μ₀sᵀ`, leaving `Λ_n` non-symmetric unless `s ∥ μ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossTerm {
    #[default]
    Symmetric,
    AsPrinted,
}

/// Lower bound on the diagonal of `S`: `S_ii ≥ s_i²/n` (Cauchy–Schwarz) or
/// the weaker `S_ii ≥ s_i²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeBound {
    #[default]
    PerCount,
    Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NiwPrior {
    pub mu0: Vec<f64>,
    pub kappa0: f64,
    pub nu0: f64,
    pub lambda0: SymMatrix,
}

impl NiwPrior {
    pub fn new(mu0: Vec<f64>, kappa0: f64, nu0: f64, lambda0: SymMatrix) -> Result<Self> {
        let p = Self { mu0, kappa0, nu0, lambda0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mu0.len();
        if d == 0 {
            return Err(domain("NIW prior mean must be nonempty"));
        }
        check_dim(d, self.lambda0.dim())?;
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            return Err(domain("NIW prior needs kappa0 > 0"));
        }
        if !(self.nu0 > d as f64 - 1.0 && self.nu0.is_finite()) {
            return Err(domain(format!("NIW prior needs nu0 > {}", d - 1)));
        }
        self.lambda0.cholesky().map(|_| ())
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }
}

/// Target `(μ*, Σ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NiwTarget {
    pub mu: Vec<f64>,
    pub sigma: SymMatrix,
}

impl NiwTarget {
    pub fn new(mu: Vec<f64>, sigma: SymMatrix) -> Result<Self> {
        check_dim(mu.len(), sigma.dim())?;
        sigma.cholesky()?;
        Ok(Self { mu, sigma })
    }
}

/// Relaxed `(n, s, S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiwStats {
    pub n: f64,
    pub s: Vec<f64>,
    pub big_s: SymMatrix,
}

impl NiwStats {
    pub fn empty(dim: usize) -> Self {
        Self { n: 0.0, s: vec![0.0; dim], big_s: SymMatrix::zeros(dim) }
    }

    /// Exact statistics of concrete points.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut st = Self::empty(dim);
        let mut scatter = vec![0.0; dim * dim];
        for x in points {
            check_dim(dim, x.len())?;
            for i in 0..dim {
                st.s[i] += x[i];
                for j in 0..dim {
                    scatter[i * dim + j] += x[i] * x[j];
                }
            }
            st.n += 1.0;
        }
        st.big_s = SymMatrix::from_row_major(dim, &scatter)?;
        Ok(st)
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiwModel {
    pub prior: NiwPrior,
    #[serde(default)]
    pub cross_term: CrossTerm,
    #[serde(default)]
    pub ridge: RidgeBound,
}

impl NiwModel {
    pub fn new(prior: NiwPrior) -> Self {
        Self { prior, cross_term: CrossTerm::default(), ridge: RidgeBound::default() }
    }

    pub fn with_cross_term(mut self, cross_term: CrossTerm) -> Self {
        self.cross_term = cross_term;
        self
    }

    pub fn with_ridge(mut self, ridge: RidgeBound) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    /// Smallest admissible `S_ii` for a given `s_i` and `n`.
    pub fn ridge_floor(&self, s_i: f64, n: f64) -> f64 {
        match self.ridge {
            RidgeBound::PerCount if n > 0.0 => s_i * s_i / n,
            RidgeBound::PerCount => {
                if s_i == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RidgeBound::Half => s_i * s_i / 2.0,
        }
    }

    /// `S ⪰ 0` and the ridge bound, both up to `tol`.
    pub fn stats_feasible(&self, stats: &NiwStats, tol: f64) -> bool {
        if stats.dim() != self.dim() || stats.big_s.dim() != self.dim() || !(stats.n >= 0.0) {
            return false;
        }
        let ridge_ok = (0..self.dim()).all(|i| stats.big_s.get(i, i) + tol >= self.ridge_floor(stats.s[i], stats.n));
        let psd_ok = match stats.big_s.symmetric_eigen() {
            Ok((vals, _)) => vals.iter().all(|v| *v >= -tol),
            Err(_) => false,
        };
        ridge_ok && psd_ok
    }

    fn cross(&self, s: &[f64]) -> Vec<f64> {
        let mu0 = &self.prior.mu0;
        let d = mu0.len();
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] = match self.cross_term {
                    CrossTerm::Symmetric => mu0[i] * s[j] + s[i] * mu0[j],
                    CrossTerm::AsPrinted => 2.0 * mu0[i] * s[j],
                };
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiwPosterior {
    pub mu_n: Vec<f64>,
    pub kappa_n: f64,
    pub nu_n: f64,
    /// Symmetric unless the cross term is [`CrossTerm::AsPrinted`].
    pub lambda_n: SquareMatrix,
}

impl NiwPosterior {
    pub fn lambda_n_sym(&self) -> SymMatrix {
        SymMatrix::from_row_major(self.lambda_n.dim(), self.lambda_n.as_slice()).expect("square buffer")
    }

    fn log_det_lambda(&self, cross_term: CrossTerm) -> Result<f64> {
        match cross_term {
            CrossTerm::Symmetric => log_det_pd(&self.lambda_n_sym()),
            CrossTerm::AsPrinted => match self.lambda_n.log_abs_det() {
                (sign, v) if sign > 0.0 => Ok(v),
                _ => Err(TeachError::NotPositiveDefinite),
            },
        }
    }
}

pub fn niw_posterior(model: &NiwModel, stats: &NiwStats) -> Result<NiwPosterior> {
    let p = &model.prior;
    let d = p.dim();
    check_dim(d, stats.dim())?;
    check_dim(d, stats.big_s.dim())?;
    let n = stats.n;
    let kn = p.kappa0 + n;
    if !(n >= 0.0 && kn > 0.0) {
        return Err(domain(format!("NIW posterior needs n >= 0, got {n}")));
    }
    let mu_n: Vec<f64> = p.mu0.iter().zip(&stats.s).map(|(m, s)| (p.kappa0 * m + s) / kn).collect();
    let cross = model.cross(&stats.s);
    let mut lam = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            lam[i * d + j] = p.lambda0.get(i, j) + stats.big_s.get(i, j) + p.kappa0 * n / kn * p.mu0[i] * p.mu0[j]
                - p.kappa0 / kn * cross[i * d + j]
                - stats.s[i] * stats.s[j] / kn;
        }
    }
    Ok(NiwPosterior { mu_n, kappa_n: kn, nu_n: p.nu0 + n, lambda_n: SquareMatrix::from_row_major(d, lam)? })
}

fn check_target(model: &NiwModel, target: &NiwTarget) -> Result<()> {
    check_dim(model.dim(), target.mu.len())?;
    check_dim(model.dim(), target.sigma.dim())
}

/// Objective without effort.
fn niw_loss(model: &NiwModel, target: &NiwTarget, stats: &NiwStats) -> Result<f64> {
    check_target(model, target)?;
    let post = niw_posterior(model, stats)?;
    let d = model.dim();
    let df = d as f64;
    let nu = post.nu_n;
    let log_det_lam = post.log_det_lambda(model.cross_term)?;
    let log_det_sigma = log_det_pd(&target.sigma)?;
    let prec = target.sigma.inverse_pd()?;
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr += prec.get(i, j) * post.lambda_n.get(j, i);
        }
    }
    let diff: Vec<f64> = target.mu.iter().zip(&post.mu_n).map(|(a, b)| a - b).collect();
    Ok(df * LN_2 / 2.0 * nu + log_gamma_half_sum(nu, d)? - nu / 2.0 * log_det_lam - df / 2.0 * post.kappa_n.ln()
        + nu / 2.0 * log_det_sigma
        + 0.5 * tr
        + post.kappa_n / 2.0 * prec.quad_form(&diff))
}

pub fn niw_step1_objective(model: &NiwModel, target: &NiwTarget, effort: &EffortSpec, stats: &NiwStats) -> Result<f64> {
    Ok(niw_loss(model, target, stats)? + effort.value(stats.n, &stats.s)?)
}

/// Gradient of [`niw_step1_objective`]. `big_s` is the symmetric Frobenius
/// gradient: moving `S` along a symmetric direction `E` changes the objective
/// by `⟨big_s, E⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwGradient {
    pub s: Vec<f64>,
    pub big_s: SymMatrix,
    pub n: f64,
}

pub fn niw_step1_gradient(
    model: &NiwModel,
    target: &NiwTarget,
    effort: &EffortSpec,
    stats: &NiwStats,
) -> Result<NiwGradient> {
    check_target(model, target)?;
    let post = niw_posterior(model, stats)?;
    let p = &model.prior;
    let d = model.dim();
    let df = d as f64;
    let (kn, nu) = (post.kappa_n, post.nu_n);
    let inv = post.lambda_n.inverse().ok_or(TeachError::NotPositiveDefinite)?;
    post.log_det_lambda(model.cross_term)?;
    let prec = target.sigma.inverse_pd()?;

    // g[i][j] = ∂/∂Λ_ij of −(ν/2) ln|Λ| + ½ tr(PΛ)
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            g[i * d + j] = -nu / 2.0 * inv.get(j, i) + 0.5 * prec.get(i, j);
        }
    }
    let g_mat = SquareMatrix::from_row_major(d, g.clone())?;
    let g_t = g_mat.transpose();
    let diff: Vec<f64> = target.mu.iter().zip(&post.mu_n).map(|(a, b)| a - b).collect();
    let p_diff = prec.mul_vec(&diff);

    let gt_mu0 = g_t.mul_vec(&p.mu0);
    let g_mu0 = g_mat.mul_vec(&p.mu0);
    let g_s = g_mat.mul_vec(&stats.s);
    let gt_s = g_t.mul_vec(&stats.s);
    let (e_n, e_s) = effort.gradient(stats.n, &stats.s)?;
    let grad_s: Vec<f64> = (0..d)
        .map(|k| {
            let cross = match model.cross_term {
                CrossTerm::Symmetric => gt_mu0[k] + g_mu0[k],
                CrossTerm::AsPrinted => 2.0 * gt_mu0[k],
            };
            -p.kappa0 / kn * cross - (g_s[k] + gt_s[k]) / kn - p_diff[k] + e_s[k]
        })
        .collect();

    let grad_big_s = SymMatrix::from_row_major(d, &g)?;

    let cross = model.cross(&stats.s);
    let mut d_lambda_dn = 0.0;
    for i in 0..d {
        for j in 0..d {
            let dl = p.kappa0 * p.kappa0 / (kn * kn) * p.mu0[i] * p.mu0[j]
                + p.kappa0 / (kn * kn) * cross[i * d + j]
                + stats.s[i] * stats.s[j] / (kn * kn);
            d_lambda_dn += g[i * d + j] * dl;
        }
    }
    let log_det_lam = post.log_det_lambda(model.cross_term)?;
    let grad_n = df * LN_2 / 2.0 + digamma_half_sum(nu, d)? - 0.5 * log_det_lam - df / (2.0 * kn)
        + 0.5 * log_det_pd(&target.sigma)?
        + d_lambda_dn
        + 0.5 * dot(&diff, &p_diff)
        + dot(&p_diff, &post.mu_n)
        + e_n;
    Ok(NiwGradient { s: grad_s, big_s: grad_big_s, n: grad_n })
}

/// Constant `c` with `−ln NIW(μ*, Σ*) = loss + c`, independent of the data.
pub fn niw_density_offset(target: &NiwTarget) -> Result<f64> {
    let df = target.mu.len() as f64;
    Ok(df * (df - 1.0) / 4.0 * LN_PI + df / 2.0 * LN_2PI + (df + 2.0) / 2.0 * log_det_pd(&target.sigma)?)
}

/// `−ln p(μ*, Σ* | D)` under the exact NIW posterior density. Only meaningful
/// with the symmetric cross term.
pub fn niw_neg_log_density(model: &NiwModel, target: &NiwTarget, stats: &NiwStats) -> Result<f64> {
    Ok(niw_loss(model, target, stats)? + niw_density_offset(target)?)
}

/// Draws `x ~ N(μ*, Σ*)`.
pub fn sample_point(target: &NiwTarget, rng: &mut dyn RngCore) -> Vec<f64> {
    let l = target.sigma.cholesky().expect("target covariance is positive definite");
    let z: Vec<f64> = (0..target.mu.len()).map(|_| StandardNormal.sample(rng)).collect();
    let lz = l.mul_vec(&z);
    target.mu.iter().zip(lz).map(|(m, v)| m + v).collect()
}

/// Sample mean and, with more points than dimensions, the ML covariance.
pub fn sample_moments(points: &[Vec<f64>]) -> Result<(Vec<f64>, Option<SymMatrix>)> {
    let first = points.first().ok_or(TeachError::EmptySet)?;
    let d = first.len();
    let st = NiwStats::from_points(d, points)?;
    let mean: Vec<f64> = st.s.iter().map(|v| v / st.n).collect();
    if points.len() <= d {
        return Ok((mean, None));
    }
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = st.big_s.get(i, j) / st.n - mean[i] * mean[j];
        }
    }
    Ok((mean, Some(SymMatrix::from_row_major(d, &cov)?)))
}
