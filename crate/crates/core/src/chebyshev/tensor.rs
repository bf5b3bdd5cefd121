use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use super::grid::SampleSet;
use crate::error::{Error, Result};

/// Condition estimates above this are reported as a warning.
pub const CONDITION_WARNING: f64 = 1e6;

/// Logarithmic λ grid for cross-validation.
pub const LAMBDA_GRID: [f64; 8] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    ExactSolve,
    /// ‖Va − f‖² + λ‖a‖₂²; `None` picks λ by cross-validation.
    Ridge(Option<f64>),
    /// ‖Va − f‖² + λ‖a‖₁; `None` picks λ by cross-validation.
    Lasso(Option<f64>),
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, l) = match self {
            FitMethod::ExactSolve => return f.write_str("exact-solve"),
            FitMethod::Ridge(l) => ("ridge", l),
            FitMethod::Lasso(l) => ("lasso", l),
        };
        match l {
            Some(l) => write!(f, "{name}({l:e})"),
            None => write!(f, "{name}(cv)"),
        }
    }
}

impl std::str::FromStr for FitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |rest: &str| -> Result<Option<f64>> {
            match rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
                None if rest.is_empty() => Ok(None),
                Some("cv") => Ok(None),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|l| *l >= 0.0)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidParameter(format!("bad λ in `{s}`"))),
                None => Err(Error::InvalidParameter(format!("unknown fit method `{s}`"))),
            }
        };
        if s == "exact" || s == "exact-solve" {
            Ok(FitMethod::ExactSolve)
        } else if let Some(rest) = s.strip_prefix("ridge") {
            Ok(FitMethod::Ridge(arg(rest)?))
        } else if let Some(rest) = s.strip_prefix("lasso") {
            Ok(FitMethod::Lasso(arg(rest)?))
        } else {
            Err(Error::InvalidParameter(format!("unknown fit method `{s}`")))
        }
    }
}

impl Serialize for FitMethod {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Coefficients a_{j₁…j_D} in the basis t₀ = √(1/M)·T₀, t_j = √(2/M)·T_j,
/// flattened row-major (dimension 0 slowest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolantTensor {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "D")]
    pub dimension: usize,
    pub convention: &'static str,
    pub coeffs: Vec<f64>,
    pub fit_method: FitMethod,
    pub condition_estimate: f64,
    /// ‖Va − f‖₂ at the fit nodes.
    pub residual: f64,
    /// Per-index factor giving weight-orthonormal coefficients ã = factor·a.
    pub orthonormal_factor: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// t_j(x) for j = 0..m−1 with the √(·/M) normalization.
pub fn t_values(x: f64, m: usize) -> Vec<f64> {
    let (s0, s) = ((1.0 / m as f64).sqrt(), (2.0 / m as f64).sqrt());
    let mut t = chebyshev_t(x, m);
    for (j, v) in t.iter_mut().enumerate() {
        *v *= if j == 0 { s0 } else { s };
    }
    t
}

/// Unnormalized T_j(x) for j = 0..m−1.
pub fn chebyshev_t(x: f64, m: usize) -> Vec<f64> {
    three_term(1.0, x, x, m)
}

/// U_j(x) for j = 0..m−1.
pub fn chebyshev_u(x: f64, m: usize) -> Vec<f64> {
    three_term(1.0, 2.0 * x, x, m)
}

fn three_term(p0: f64, p1: f64, x: f64, m: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(m);
    let (mut a, mut b) = (p0, p1);
    for _ in 0..m {
        v.push(a);
        let c = 2.0 * x * b - a;
        a = b;
        b = c;
    }
    v
}

/// Generalized Vandermonde V_{k,j} = ∏ᵢ t_{jᵢ}(x_{kᵢ}) over the tensor grid.
pub fn vandermonde(coords: &[f64], m: usize, dimension: usize) -> DMatrix<f64> {
    let rows = coords.len();
    let mut v1 = DMatrix::zeros(rows, m);
    for (k, &x) in coords.iter().enumerate() {
        for (j, t) in t_values(x, m).into_iter().enumerate() {
            v1[(k, j)] = t;
        }
    }
    let mut v = v1.clone();
    for _ in 1..dimension {
        v = v.kronecker(&v1);
    }
    v
}

fn ridge_solve(v: &DMatrix<f64>, f: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = v.ncols();
    let a = v.transpose() * v + DMatrix::identity(n, n) * lambda;
    let rhs = v.transpose() * f;
    a.clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| a.lu().solve(&rhs))
        .ok_or_else(|| Error::InvalidParameter("ridge normal equations are singular".into()))
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Coordinate descent for ‖Va − f‖² + λ‖a‖₁.
fn lasso_solve(v: &DMatrix<f64>, f: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = v.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| v.column(j).norm_squared()).collect();
    let mut a = DVector::zeros(n);
    let mut r = f.clone();
    for _ in 0..10_000 {
        let mut delta = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = v.column(j);
            let rho = col.dot(&r) + col_sq[j] * a[j];
            let new = soft(rho, 0.5 * lambda) / col_sq[j];
            let d = new - a[j];
            if d != 0.0 {
                r -= col * d;
                a[j] = new;
                delta = delta.max(d.abs());
            }
        }
        if delta < 1e-13 {
            break;
        }
    }
    a
}

fn regularized(v: &DMatrix<f64>, f: &DVector<f64>, lasso: bool, lambda: f64) -> Result<DVector<f64>> {
    if lasso {
        Ok(lasso_solve(v, f, lambda))
    } else {
        ridge_solve(v, f, lambda)
    }
}

/// λ from [`LAMBDA_GRID`] with the lowest mean validation error over
/// interleaved folds (row i belongs to fold i mod 5).
pub fn cross_validate(v: &DMatrix<f64>, f: &DVector<f64>, lasso: bool) -> Result<f64> {
    let rows = v.nrows();
    let mut best = (f64::INFINITY, LAMBDA_GRID[0]);
    for &lambda in &LAMBDA_GRID {
        let mut err = 0.0;
        for fold in 0..CV_FOLDS.min(rows) {
            let train: Vec<usize> = (0..rows).filter(|i| i % CV_FOLDS != fold).collect();
            let test: Vec<usize> = (0..rows).filter(|i| i % CV_FOLDS == fold).collect();
            let vt = v.select_rows(&train);
            let ft = f.select_rows(&train);
            let a = regularized(&vt, &ft, lasso, lambda)?;
            let pred = v.select_rows(&test) * &a;
            err += (pred - f.select_rows(&test)).norm_squared();
        }
        if err < best.0 {
            best = (err, lambda);
        }
    }
    Ok(best.1)
}

/// 1-norm condition number ‖V‖₁‖V⁻¹‖₁.
fn condition_1(v: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    match v.clone().try_inverse() {
        Some(inv) => norm1(v) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Fits the tensor to a complete sample set.
pub fn fit(samples: &SampleSet, method: FitMethod) -> Result<InterpolantTensor> {
    let grid = &samples.grid;
    let (m, d) = (grid.m, grid.dimension);
    let f = DVector::from_vec(samples.values()?);
    grid.check_distinct()?;
    let v = vandermonde(grid.coords(), m, d);
    let cond = condition_1(&v);
    let (a, method) = match method {
        FitMethod::ExactSolve => {
            let a = v
                .clone()
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::InvalidParameter("Vandermonde matrix is singular".into()))?;
            (a, method)
        }
        FitMethod::Ridge(l) | FitMethod::Lasso(l) => {
            let lasso = matches!(method, FitMethod::Lasso(_));
            let lambda = match l {
                Some(l) => l,
                None => cross_validate(&v, &f, lasso)?,
            };
            let a = regularized(&v, &f, lasso, lambda)?;
            let method = if lasso { FitMethod::Lasso(Some(lambda)) } else { FitMethod::Ridge(Some(lambda)) };
            (a, method)
        }
    };
    let residual = (&v * &a - &f).norm();
    let warning = (cond > CONDITION_WARNING).then(|| format!("Vandermonde condition estimate {cond:.3e} exceeds 1e6"));
    Ok(InterpolantTensor {
        m,
        dimension: d,
        convention: "t-normalized",
        coeffs: a.as_slice().to_vec(),
        fit_method: method,
        condition_estimate: cond,
        residual,
        orthonormal_factor: vec![(PI / m as f64).sqrt().powi(d as i32); m],
        warning,
    })
}

/// Clenshaw sum Σ c_j P_j(x) for P = T (`first_kind`) or U.
fn clenshaw(c: &[f64], x: f64, first_kind: bool) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = cj + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    let c0 = c.first().copied().unwrap_or(0.0);
    if first_kind {
        c0 + x * b1 - b2
    } else {
        c0 + 2.0 * x * b1 - b2
    }
}

/// Contracts a row-major tensor with side `m` one dimension at a time,
/// last dimension first.
fn contract(coeffs: &[f64], m: usize, x: &[f64], first_kind: bool) -> f64 {
    let mut cur = coeffs.to_vec();
    for &xd in x.iter().rev() {
        cur = cur.chunks(m).map(|c| clenshaw(c, xd, first_kind)).collect();
    }
    cur[0]
}

impl InterpolantTensor {
    pub fn zeros(m: usize, dimension: usize) -> Self {
        InterpolantTensor {
            m,
            dimension,
            convention: "t-normalized",
            coeffs: vec![0.0; m.pow(dimension as u32)],
            fit_method: FitMethod::ExactSolve,
            condition_estimate: 1.0,
            residual: 0.0,
            orthonormal_factor: vec![(PI / m as f64).sqrt().powi(dimension as i32); m],
            warning: None,
        }
    }

    /// Coefficient of the multi-index `j`.
    pub fn coeff(&self, j: &[usize]) -> f64 {
        self.coeffs[j.iter().fold(0, |acc, &ji| acc * self.m + ji)]
    }

    /// Coefficients with t-normalization folded in, so the tensor is a plain
    /// T-series in each dimension.
    fn t_series(&self) -> Vec<f64> {
        let s = |j: usize| if j == 0 { (1.0 / self.m as f64).sqrt() } else { (2.0 / self.m as f64).sqrt() };
        self.coeffs
            .iter()
            .enumerate()
            .map(|(flat, a)| {
                let mut r = flat;
                let mut w = *a;
                for _ in 0..self.dimension {
                    w *= s(r % self.m);
                    r /= self.m;
                }
                w
            })
            .collect()
    }

    /// P_{M−1}Ψ(x) by Clenshaw recurrence per dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        contract(&self.t_series(), self.m, x, true)
    }

    /// Direct summation Σ a_j ∏ t_{jᵢ}(xᵢ), for cross-checks.
    pub fn evaluate_naive(&self, x: &[f64]) -> f64 {
        let ts: Vec<Vec<f64>> = x.iter().map(|&xi| t_values(xi, self.m)).collect();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(flat, a)| {
                let mut r = flat;
                let mut w = *a;
                for d in (0..self.dimension).rev() {
                    w *= ts[d][r % self.m];
                    r /= self.m;
                }
                w
            })
            .sum()
    }

    /// Mixed derivative ∂^D/∂x₁…∂x_D as a U-series tensor with side M − 1:
    /// b_{j−1} = a_j·j·√(2/M) per dimension.
    pub fn derivative_u_series(&self) -> Vec<f64> {
        let m = self.m;
        let md = m - 1;
        let s = (2.0 / m as f64).sqrt();
        let mut out = vec![0.0; md.pow(self.dimension as u32)];
        for (flat, o) in out.iter_mut().enumerate() {
            let mut r = flat;
            let mut src = vec![0; self.dimension];
            let mut w = 1.0;
            for d in (0..self.dimension).rev() {
                let j = r % md + 1;
                src[d] = j;
                w *= j as f64 * s;
                r /= md;
            }
            *o = w * self.coeff(&src);
        }
        out
    }

    /// (ψ², ψ) with ψ² the mixed derivative of the fit and ψ = √|ψ²|.
    pub fn differentiate_extract(&self, x: &[f64]) -> (f64, f64) {
        let psi2 = if self.m < 2 { 0.0 } else { contract(&self.derivative_u_series(), self.m - 1, x, false) };
        (psi2, psi2.abs().sqrt())
    }

    /// Weight-orthonormal coefficients ã.
    pub fn orthonormal_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|a| a * self.orthonormal_factor[0]).collect()
    }
}
