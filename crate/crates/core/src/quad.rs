//! Quadrature rules on intervals and boxes.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Points per Gauss-Legendre panel.
const GL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite Gauss-Legendre points and weights on [a, b] with `panels` panels.
pub fn gl_points(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gl16();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Composite Simpson points and weights on [a, b]: each of `panels` panels
/// uses its endpoints and midpoint.
pub fn simpson_points(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(2 * panels + 1);
    for k in 0..=2 * panels {
        let x = a + 0.5 * h * k as f64;
        let w = if k == 0 || k == 2 * panels {
            h / 6.0
        } else if k % 2 == 1 {
            4.0 * h / 6.0
        } else {
            2.0 * h / 6.0
        };
        out.push((x, w));
    }
    out
}

/// Tensor-product integral of `f` over the box with per-dimension rules.
pub fn tensor_integral(rules: &[Vec<(f64, f64)>], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let dim = rules.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    if rules.iter().any(|r| r.is_empty()) {
        return 0.0;
    }
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            let (xd, wd) = rules[d][idx[d]];
            x[d] = xd;
            w *= wd;
        }
        total += w * f(&x);
        // odometer increment, last dimension fastest
        let mut d = dim;
        loop {
            if d == 0 {
                return total;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rules[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 30 is exact for a 16-point rule
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((got - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rules_on_exp() {
        let exact = 1f64.exp() - (-1f64).exp();
        let gl: f64 = gl_points(-1.0, 1.0, 4).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((gl - exact).abs() < 1e-14);
        let s: f64 = simpson_points(-1.0, 1.0, 64).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - exact).abs() < 1e-8);
    }

    #[test]
    fn tensor_integral_of_product() {
        let r = gl_points(-1.0, 1.0, 2);
        let v = tensor_integral(&[r.clone(), r], &|x| x[0].exp() * x[1] * x[1]);
        let exact = (1f64.exp() - (-1f64).exp()) * 2.0 / 3.0;
        assert!((v - exact).abs() < 1e-13);
    }
}
