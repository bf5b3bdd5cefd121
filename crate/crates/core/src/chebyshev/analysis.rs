use serde::Serialize;

use super::tensor::InterpolantTensor;
use crate::error::{Error, Result};

/// Degree-rule constants (c₁, c₂, c₃) in
/// M = ⌈c₁·Λ·r + c₂·log(1/ε)/(D·log r) + c₃⌉.
pub const DEGREE_CONSTANTS: (f64, f64, f64) = (2.0, 1.0, 4.0);

/// Number of nodes per dimension for smoothness Λ and target ε.
pub fn select_degree(smoothness: f64, epsilon: f64, dimension: usize, r: f64) -> Result<usize> {
    if !(r > 1.0) {
        return Err(Error::Domain { what: "polycylinder radius r must exceed 1", value: r });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain { what: "ε must lie in (0, 1)", value: epsilon });
    }
    if !(smoothness > 0.0) {
        return Err(Error::Domain { what: "smoothness Λ must be positive", value: smoothness });
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let (c1, c2, c3) = DEGREE_CONSTANTS;
    let m = c1 * smoothness * r + c2 * (1.0 / epsilon).ln() / (dimension as f64 * r.ln()) + c3;
    Ok(m.ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// ρ̂ = exp(−slope) of log|ã_j| against j; `None` when the tail
    /// vanishes (finite expansion).
    pub rho: Option<f64>,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    pub first: usize,
    pub last: usize,
}

/// Relative size below which the last coefficient counts as zero.
pub const ZERO_TAIL: f64 = 1e-9;

/// Log-linear decay fit of |ã_j| per dimension, taking for each j the
/// largest magnitude over the other indices. `range` limits j to
/// `first..=last` (default 1..=M−1).
pub fn coefficient_decay(t: &InterpolantTensor, range: Option<(usize, usize)>) -> Result<Vec<DecayFit>> {
    if t.m < 6 {
        return Err(Error::InvalidParameter(format!("decay fit needs M ≥ 6, got {}", t.m)));
    }
    let (first, last) = range.unwrap_or((1, t.m - 1));
    if first >= last || last >= t.m {
        return Err(Error::InvalidParameter(format!("bad decay range {first}..={last} for M = {}", t.m)));
    }
    let at = t.orthonormal_coeffs();
    let mut out = Vec::with_capacity(t.dimension);
    for d in 0..t.dimension {
        let mut mag = vec![0.0f64; t.m];
        for (flat, a) in at.iter().enumerate() {
            let j = (flat / t.m.pow((t.dimension - 1 - d) as u32)) % t.m;
            mag[j] = mag[j].max(a.abs());
        }
        let window = &mag[first..=last];
        let top = window.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 || window[window.len() - 1] < ZERO_TAIL * top {
            out.push(DecayFit { rho: None, r_squared: f64::NAN, first, last });
            continue;
        }
        let pts: Vec<(f64, f64)> = (first..=last).map(|j| (j as f64, mag[j].ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let slope = sxy / sxx;
        let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        out.push(DecayFit { rho: Some((-slope).exp()), r_squared, first, last });
    }
    Ok(out)
}

/// Stage-by-stage error bounds with all constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub eps_psi_sample: f64,
    /// M^{3D/2}·ε_Ψ
    pub eps_coeff: f64,
    /// 2^{D/2}·M^{3D}·ε_Ψ
    pub eps_psi2: f64,
    /// ε_{ψ²}/min ψ̃
    pub eps_psi: f64,
    /// ε_Ψ·log^D(M), the Lebesgue-constant view of the Ψ fit.
    pub eps_lebesgue: f64,
}

pub fn error_budget(eps_sample: f64, m: usize, dimension: usize, min_psi_tilde: f64) -> Result<ErrorBudget> {
    if !(min_psi_tilde > 0.0) {
        return Err(Error::Domain { what: "min ψ̃ must be positive", value: min_psi_tilde });
    }
    if !(eps_sample >= 0.0) {
        return Err(Error::Domain { what: "sample error must be non-negative", value: eps_sample });
    }
    let d = dimension as f64;
    let mf = m as f64;
    let eps_psi2 = 2f64.powf(d / 2.0) * mf.powf(3.0 * d) * eps_sample;
    Ok(ErrorBudget {
        eps_psi_sample: eps_sample,
        eps_coeff: mf.powf(1.5 * d) * eps_sample,
        eps_psi2,
        eps_psi: eps_psi2 / min_psi_tilde,
        eps_lebesgue: eps_sample * mf.ln().powf(d),
    })
}

/// Per-node precision ε/(2^{D/2}·M^{3D}) that keeps ε_{ψ²} at ε.
pub fn node_precision(epsilon: f64, m: usize, dimension: usize) -> f64 {
    let d = dimension as f64;
    epsilon / (2f64.powf(d / 2.0) * (m as f64).powf(3.0 * d))
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::{fit, make_grid, FitMethod, Provenance, SampleSet};

    #[test]
    fn degree_rule() {
        let m = select_degree(1.0, 1e-2, 1, 2.0).unwrap();
        let m10 = select_degree(1.0, 1e-3, 1, 2.0).unwrap();
        assert!((3..=4).contains(&(m10 - m)));
        assert!(select_degree(2.0, 1e-2, 1, 2.0).unwrap() > m);
        assert!(select_degree(1.0, 1e-2, 1, 1.0).is_err());
    }

    #[test]
    fn budget_values() {
        let b = error_budget(1.0, 17, 1, 1.0).unwrap();
        assert!((b.eps_psi2 - 2f64.sqrt() * 4913.0).abs() < 1e-9);
        let b2 = error_budget(1.0, 34, 1, 1.0).unwrap();
        assert!((b2.eps_psi2 / b.eps_psi2 - 8.0).abs() < 1e-12);
        let z = error_budget(0.0, 17, 2, 0.3).unwrap();
        assert_eq!((z.eps_coeff, z.eps_psi2, z.eps_psi), (0.0, 0.0, 0.0));
        assert!(error_budget(1.0, 17, 1, 0.0).is_err());
    }

    #[test]
    fn polynomial_has_no_decay_rate() {
        let grid = make_grid(10, 1, None).unwrap();
        let s = SampleSet::from_fn(grid, Provenance::Exact, |_, x| x[0].powi(3) - x[0]);
        let t = fit(&s, FitMethod::ExactSolve).unwrap();
        assert_eq!(coefficient_decay(&t, None).unwrap()[0].rho, None);
    }

    #[test]
    fn geometric_decay_is_recovered() {
        // Chebyshev coefficients of 1/(p − x) decay like (p + √(p² − 1))^{−j}.
        let p: f64 = 1.25;
        let grid = make_grid(20, 1, None).unwrap();
        let s = SampleSet::from_fn(grid, Provenance::Exact, |_, x| 1.0 / (p - x[0]));
        let t = fit(&s, FitMethod::ExactSolve).unwrap();
        let rho = coefficient_decay(&t, Some((1, 12))).unwrap()[0].rho.unwrap();
        assert!((rho - (p + (p * p - 1.0).sqrt())).abs() < 0.01);
    }

    #[test]
    fn isotonic_projection() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert!(isotonic(&[]).is_empty());
    }
}
