//! Target functions on [-1, 1]^D and their classical integrals.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{gl_points, tensor_integral};

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A non-negative function on [-1, 1]^D with its smoothness parameter Λ
/// (derivatives of order k bounded by Λ^{k+1}).
#[derive(Clone)]
pub struct TargetFunction {
    label: String,
    dimension: usize,
    smoothness: f64,
    scale: f64,
    eval: Evaluator,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("label", &self.label)
            .field("dimension", &self.dimension)
            .field("smoothness", &self.smoothness)
            .field("scale", &self.scale)
            .finish()
    }
}

/// Gauss-Legendre panels per dimension for integrals of ψ.
fn panels(dimension: usize) -> usize {
    if dimension == 1 {
        16
    } else {
        8
    }
}

impl TargetFunction {
    pub fn new(
        label: impl Into<String>,
        dimension: usize,
        smoothness: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(smoothness > 0.0) {
            return Err(Error::Domain { what: "smoothness Λ must be positive", value: smoothness });
        }
        Ok(TargetFunction {
            label: label.into(),
            dimension,
            smoothness,
            scale: 1.0,
            eval: Arc::new(f),
        })
    }

    /// Built-in function by registry label, already normalized.
    ///
    /// Labels: `paper-sine-exp`, `constant`, `gaussian` or `gaussian(σ)`,
    /// `product-2d`, and `table:<csv path>`.
    pub fn from_label(label: &str, dimension: usize) -> Result<Self> {
        let label = label.trim();
        let need_dim = |d: usize| {
            if dimension == d {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "`{label}` is {d}-dimensional, dimension {dimension} requested"
                )))
            }
        };
        let raw = if label == "paper-sine-exp" {
            need_dim(1)?;
            // |d^k/dx^k (sin 5x + 2) e^x| grows like 26^{k/2}.
            Self::new(label, 1, 26f64.sqrt(), |x| ((5.0 * x[0]).sin() + 2.0) * x[0].exp())?
        } else if label == "constant" {
            Self::new(label, dimension, 1.0, |_| 1.0)?
        } else if label == "product-2d" {
            need_dim(2)?;
            Self::new(label, 2, 2.1, |x| (2.0 + (2.0 * x[0]).sin()) * (0.5 * x[1]).exp())?
        } else if let Some(rest) = label.strip_prefix("gaussian") {
            let sigma = match rest.trim() {
                "" => 0.5,
                r => r
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::UnknownFunction(label.to_string()))?,
            };
            if !(sigma > 0.0) {
                return Err(Error::Domain { what: "gaussian width σ must be positive", value: sigma });
            }
            let label = format!("gaussian({sigma})");
            Self::new(label, dimension, (2.0 / sigma).max(1.0), move |x| {
                (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp()
            })?
        } else if let Some(path) = label.strip_prefix("table:") {
            let t = Self::from_table(path.trim())?;
            need_dim(t.dimension)?;
            return Ok(t);
        } else {
            return Err(Error::UnknownFunction(label.to_string()));
        };
        raw.normalized()
    }

    /// Sampled table from CSV with columns `x…,value` and a header row.
    /// One-dimensional tables interpolate linearly; two-dimensional tables
    /// must form a full rectangular grid and interpolate bilinearly. Values
    /// outside the sampled range are clamped to the boundary.
    pub fn from_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
            rows.push(row);
        }
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParameter(format!(
                "{}: expected rows of the form x…,value",
                path.display()
            )));
        }
        let label = format!("table:{}", path.display());
        let dim = width - 1;
        for r in &rows {
            if !(r[dim] >= 0.0) {
                return Err(Error::BadIntegrand { x: r[..dim].to_vec(), value: r[dim] });
            }
        }
        let table = match dim {
            1 => Table::line(rows)?,
            2 => Table::grid(rows)?,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "{}: tables support one or two coordinates",
                    path.display()
                )))
            }
        };
        let smoothness = table.smoothness_estimate();
        let table = Arc::new(table);
        Self::new(label, dim, smoothness, move |x| table.eval(x))?.normalized()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.scale * (self.eval)(x)
    }

    pub fn evaluate_1d(&self, x: f64) -> f64 {
        self.evaluate(&[x])
    }

    /// ∫ ψ² over [-1, 1]^D.
    pub fn norm_squared(&self) -> f64 {
        self.integrate_box(&vec![1.0; self.dimension], |v| v * v)
    }

    /// ∫ ψ over [-1, 1]^D.
    pub fn l1_norm(&self) -> f64 {
        self.integrate_box(&vec![1.0; self.dimension], |v| v)
    }

    /// Ψ(x) = ∫ ψ² over the box [-1, x₁] × … × [-1, x_D].
    pub fn cumulative(&self, x: &[f64]) -> f64 {
        self.integrate_box(x, |v| v * v)
    }

    fn integrate_box(&self, upper: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        let p = panels(self.dimension);
        let rules: Vec<_> = upper.iter().map(|&u| gl_points(-1.0, u.clamp(-1.0, 1.0), p)).collect();
        tensor_integral(&rules, &|x| g(self.evaluate(x)))
    }

    /// Copy rescaled so that ∫ ψ² = 1.
    pub fn normalized(&self) -> Result<Self> {
        let ns = self.norm_squared();
        if !(ns > 0.0) || !ns.is_finite() {
            return Err(Error::Domain { what: "∫ψ² must be positive and finite", value: ns });
        }
        Ok(TargetFunction { scale: self.scale / ns.sqrt(), ..self.clone() })
    }

    /// Checks ψ ≥ 0 and finite on a tensor grid with `points` per dimension.
    pub fn check_nonnegative(&self, points: usize) -> Result<()> {
        let points = points.max(2);
        let total = points.pow(self.dimension as u32);
        let mut x = vec![0.0; self.dimension];
        for flat in 0..total {
            let mut r = flat;
            for xd in x.iter_mut() {
                *xd = -1.0 + 2.0 * (r % points) as f64 / (points - 1) as f64;
                r /= points;
            }
            let v = self.evaluate(&x);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::BadIntegrand { x: x.clone(), value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Table {
    Line { xs: Vec<f64>, vs: Vec<f64> },
    Grid { xs: Vec<f64>, ys: Vec<f64>, vs: Vec<f64> },
}

/// Bracketing index and weight of `x` in the sorted `xs`, clamped.
fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
    if xs.len() == 1 || x <= xs[0] {
        return (0, 0.0);
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return (last - 1, 1.0);
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl Table {
    fn line(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if rows.windows(2).any(|w| w[0][0] == w[1][0]) {
            return Err(Error::InvalidParameter("table has repeated x values".into()));
        }
        Ok(Table::Line {
            xs: rows.iter().map(|r| r[0]).collect(),
            vs: rows.iter().map(|r| r[1]).collect(),
        })
    }

    fn grid(rows: Vec<Vec<f64>>) -> Result<Self> {
        let xs = sorted_unique(rows.iter().map(|r| r[0]).collect());
        let ys = sorted_unique(rows.iter().map(|r| r[1]).collect());
        let mut vs = vec![f64::NAN; xs.len() * ys.len()];
        for r in &rows {
            let i = xs.partition_point(|&v| v < r[0]);
            let j = ys.partition_point(|&v| v < r[1]);
            vs[i * ys.len() + j] = r[2];
        }
        if rows.len() != vs.len() || vs.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("2-D table must be a full rectangular grid".into()));
        }
        Ok(Table::Grid { xs, ys, vs })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Table::Line { xs, vs } => {
                let (i, t) = bracket(xs, x[0]);
                let j = (i + 1).min(xs.len() - 1);
                (1.0 - t) * vs[i] + t * vs[j]
            }
            Table::Grid { xs, ys, vs } => {
                let (i, s) = bracket(xs, x[0]);
                let (j, t) = bracket(ys, x[1]);
                let i1 = (i + 1).min(xs.len() - 1);
                let j1 = (j + 1).min(ys.len() - 1);
                let v = |a: usize, b: usize| vs[a * ys.len() + b];
                (1.0 - s) * ((1.0 - t) * v(i, j) + t * v(i, j1)) + s * ((1.0 - t) * v(i1, j) + t * v(i1, j1))
            }
        }
    }

    /// Λ estimate: max of sup|ψ| and √(sup|ψ'|) from finite differences of
    /// the raw table. Used only as degree-selection metadata.
    fn smoothness_estimate(&self) -> f64 {
        let slopes = |xs: &[f64], vs: &[f64]| -> (f64, f64) {
            let max_v = vs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let max_s = xs
                .windows(2)
                .zip(vs.windows(2))
                .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
                .fold(0.0f64, f64::max);
            (max_v, max_s)
        };
        let (v, s) = match self {
            Table::Line { xs, vs } => slopes(xs, vs),
            Table::Grid { xs, ys, vs } => {
                let mut acc = (0.0f64, 0.0f64);
                for i in 0..xs.len() {
                    let row: Vec<f64> = (0..ys.len()).map(|j| vs[i * ys.len() + j]).collect();
                    let (a, b) = slopes(ys, &row);
                    acc = (acc.0.max(a), acc.1.max(b));
                }
                for j in 0..ys.len() {
                    let col: Vec<f64> = (0..xs.len()).map(|i| vs[i * ys.len() + j]).collect();
                    let (a, b) = slopes(xs, &col);
                    acc = (acc.0.max(a), acc.1.max(b));
                }
                acc
            }
        };
        v.max(s.sqrt()).max(1e-3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn builtins_are_normalized() {
        for (label, d) in [("paper-sine-exp", 1), ("constant", 1), ("constant", 2), ("gaussian(0.4)", 1), ("product-2d", 2)] {
            let f = TargetFunction::from_label(label, d).unwrap();
            assert!((f.norm_squared() - 1.0).abs() < 1e-8, "{label}");
            assert!((f.cumulative(&vec![1.0; d]) - 1.0).abs() < 1e-8);
            f.check_nonnegative(65).unwrap();
        }
    }

    #[test]
    fn constant_values() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        assert!((f.evaluate_1d(0.3) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((f.l1_norm() - 2f64.sqrt()).abs() < 1e-12);
        assert!((f.cumulative(&[0.0]) - 0.5).abs() < 1e-12);
        let g = TargetFunction::from_label("constant", 2).unwrap();
        assert!((g.evaluate(&[0.1, 0.2]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn registry_errors() {
        assert!(matches!(TargetFunction::from_label("nope", 1), Err(Error::UnknownFunction(_))));
        assert!(TargetFunction::from_label("paper-sine-exp", 2).is_err());
        assert!(TargetFunction::from_label("gaussian(-1)", 1).is_err());
        assert_eq!(TargetFunction::from_label("gaussian(0.25)", 1).unwrap().label(), "gaussian(0.25)");
    }

    #[test]
    fn table_interpolates_linearly() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,value").unwrap();
        for k in 0..=4 {
            let x = -1.0 + 0.5 * k as f64;
            writeln!(file, "{x},{}", 1.0 + x).unwrap();
        }
        let f = TargetFunction::from_table(file.path()).unwrap();
        // ∫(1+x)² over [-1,1] = 8/3
        let s = (8.0f64 / 3.0).sqrt();
        assert!((f.evaluate_1d(0.25) * s - 1.25).abs() < 1e-12);
        assert!((f.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn table_rejects_negative_values() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,value\n-1,1\n1,-0.5").unwrap();
        assert!(matches!(TargetFunction::from_table(file.path()), Err(Error::BadIntegrand { .. })));
    }

    #[test]
    fn grid_table_is_bilinear() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,y,value").unwrap();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                writeln!(file, "{x},{y},{}", 2.0 + x + 0.5 * y).unwrap();
            }
        }
        let f = TargetFunction::from_table(file.path()).unwrap();
        let r = f.evaluate(&[0.5, 0.5]) / f.evaluate(&[0.0, 0.0]);
        assert!((r - 2.75 / 2.0).abs() < 1e-12);
    }
}
