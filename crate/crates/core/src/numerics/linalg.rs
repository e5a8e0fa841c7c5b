//! Small dense linear algebra: symmetric matrices, Cholesky, a cyclic Jacobi
//! eigensolver and an LU factorization for the occasional non-symmetric case.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, TeachError};

/// Sweep cap for the Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix stored row-major.
///
/// Every constructor symmetrizes its input, so `get(i, j) == get(j, i)` holds
/// bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, v: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = v;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m
    }

    /// Builds from a row-major buffer, replacing it by `(A + Aᵀ) / 2`.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        if dim == 0 {
            return Err(TeachError::Dimension { expected: 1, got: 0 });
        }
        let mut m = Self { dim, data: data.to_vec() };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * dim);
        for r in rows {
            check_dim(dim, r.len())?;
            flat.extend_from_slice(r);
        }
        Self::from_row_major(dim, &flat)
    }

    /// `a bᵀ + b aᵀ` scaled by `scale`; `outer(a, a, ½)` is `a aᵀ`.
    pub fn sym_outer(a: &[f64], b: &[f64], scale: f64) -> Self {
        let dim = a.len();
        assert_eq!(dim, b.len());
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = scale * (a[i] * b[j] + b[i] * a[j]);
            }
        }
        m
    }

    pub fn outer(a: &[f64]) -> Self {
        Self::sym_outer(a, a, 0.5)
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.dim).map(|row| dot(row, x)).collect()
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Frobenius inner product `tr(A B)` for symmetric `A`, `B`.
    pub fn frobenius_dot(&self, other: &Self) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_square(&self) -> SquareMatrix {
        SquareMatrix { dim: self.dim, data: self.data.clone() }
    }

    /// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
    pub fn cholesky(&self) -> Result<SquareMatrix> {
        let d = self.dim;
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * d + k] * l[j * d + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(TeachError::NotPositiveDefinite);
            }
            let ljj = diag.sqrt();
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = v / ljj;
            }
        }
        Ok(SquareMatrix { dim: d, data: l })
    }

    /// Inverse of a positive-definite matrix.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let l = self.cholesky()?;
        let d = self.dim;
        let mut inv = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = cholesky_solve(&l, &e);
            for i in 0..d {
                inv[i * d + j] = col[i];
            }
        }
        SymMatrix::from_row_major(d, &inv)
    }

    /// Eigen-decomposition by cyclic Jacobi rotations. Returns eigenvalues and
    /// the matrix whose columns are the matching unit eigenvectors.
    pub fn symmetric_eigen(&self) -> Result<(Vec<f64>, SquareMatrix)> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut v = SquareMatrix::identity(d).data;
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 || d == 1 {
            let vals = (0..d).map(|i| a[i * d + i]).collect();
            return Ok((vals, SquareMatrix { dim: d, data: v }));
        }
        let tol = 1e-15 * scale;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * d + j] * a[i * d + j])
                .sum::<f64>()
                .sqrt();
            if off <= tol {
                let vals = (0..d).map(|i| a[i * d + i]).collect();
                return Ok((vals, SquareMatrix { dim: d, data: v }));
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        Err(TeachError::EigenNoConvergence(JACOBI_MAX_SWEEPS))
    }

    /// `V diag(f(λ)) Vᵀ`
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let (vals, vecs) = self.symmetric_eigen()?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for (k, lam) in vals.iter().enumerate() {
            let w = f(*lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vik = vecs.get(i, k);
                for j in 0..d {
                    out[i * d + j] += w * vik * vecs.get(j, k);
                }
            }
        }
        SymMatrix::from_row_major(d, &out)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = TeachError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.rows()
    }
}

/// General dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j];
            }
        }
        Self { dim: d, data }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.dim).map(|row| dot(row, x)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `(sign, ln|det|)` via LU with partial pivoting; sign is 0 when singular.
    pub fn log_abs_det(&self) -> (f64, f64) {
        match self.lu() {
            Some(lu) => lu.log_abs_det(),
            None => (0.0, f64::NEG_INFINITY),
        }
    }

    pub fn inverse(&self) -> Option<SquareMatrix> {
        let lu = self.lu()?;
        let d = self.dim;
        let mut inv = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..d {
                inv[i * d + j] = col[i];
            }
        }
        Some(SquareMatrix { dim: d, data: inv })
    }

    fn lu(&self) -> Option<Lu> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut sign = 1.0;
        for k in 0..d {
            let (piv, max) =
                (k..d).map(|i| (i, a[i * d + k].abs())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if max == 0.0 || !max.is_finite() {
                return None;
            }
            if piv != k {
                for j in 0..d {
                    a.swap(k * d + j, piv * d + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            for i in (k + 1)..d {
                let f = a[i * d + k] / a[k * d + k];
                a[i * d + k] = f;
                for j in (k + 1)..d {
                    a[i * d + j] -= f * a[k * d + j];
                }
            }
        }
        Some(Lu { dim: d, a, perm, sign })
    }
}

struct Lu {
    dim: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn log_abs_det(&self) -> (f64, f64) {
        let d = self.dim;
        let mut sign = self.sign;
        let mut log = 0.0;
        for i in 0..d {
            let u = self.a[i * d + i];
            sign *= u.signum();
            log += u.abs().ln();
        }
        (sign, log)
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..d {
            for k in 0..i {
                y[i] -= self.a[i * d + k] * y[k];
            }
        }
        for i in (0..d).rev() {
            for k in (i + 1)..d {
                y[i] -= self.a[i * d + k] * y[k];
            }
            y[i] /= self.a[i * d + i];
        }
        y
    }
}

fn cholesky_solve(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let d = l.dim;
    let mut y = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..d).rev() {
        for k in (i + 1)..d {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `ln|M|` for positive-definite `M` via its Cholesky factor.
pub fn log_det_pd(m: &SymMatrix) -> Result<f64> {
    let l = m.cholesky()?;
    Ok((0..m.dim()).map(|i| l.get(i, i).ln()).sum::<f64>() * 2.0)
}

/// Solves `M x = b` for positive-definite `M`.
pub fn solve_pd(m: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim(m.dim(), b.len())?;
    let l = m.cholesky()?;
    Ok(cholesky_solve(&l, b))
}

/// Nearest positive-semidefinite matrix in Frobenius norm: negative
/// eigenvalues are clipped to zero.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    m.map_eigenvalues(|l| l.max(0.0))
}
