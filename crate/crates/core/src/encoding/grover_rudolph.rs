//! Grover-Rudolph state preparation from interval masses of ψ².

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::TargetFunction;
use crate::error::{Error, Result};
use crate::quad::{simpson_points, tensor_integral};
use crate::sim::{Circuit, Control, Gate, QubitLayout, StateVector};

/// Default simulator cap on total qubits.
pub const DEFAULT_QUBIT_CAP: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Data qubits per dimension.
    pub n: usize,
    /// Angle-precision qubits; `None` applies exact angles.
    pub m: Option<usize>,
    pub dimension: usize,
    /// Simpson panels across [-1, 1] per dimension.
    pub quadrature_points: usize,
    pub qubit_cap: usize,
}

impl EncodingConfig {
    pub fn new(n: usize, m: Option<usize>, dimension: usize) -> Self {
        EncodingConfig {
            n,
            m,
            dimension,
            quadrature_points: (1usize << n.min(40)).max(1024),
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dimension == 0 || self.m == Some(0) {
            return Err(Error::InvalidParameter("n, m and D must be at least 1".into()));
        }
        if self.quadrature_points < (1usize << self.n) {
            return Err(Error::InvalidParameter(format!(
                "quadrature_points {} below 2^n = {}",
                self.quadrature_points,
                1usize << self.n
            )));
        }
        Ok(())
    }

    pub fn data_qubits(&self) -> usize {
        self.n * self.dimension
    }

    pub fn total_qubits(&self) -> usize {
        self.data_qubits() + self.m.unwrap_or(0)
    }
}

/// Grid point x_j = j/2^{n−1} − 1.
pub fn grid_point(j: usize, n: usize) -> f64 {
    j as f64 / (1u64 << (n - 1)) as f64 - 1.0
}

/// Basis index of the data registers holding (j_0, …, j_{D−1}); register
/// `x0` occupies the lowest qubits.
pub fn state_index(js: &[usize], n: usize) -> usize {
    js.iter().enumerate().map(|(d, &j)| j << (n * d)).sum()
}

/// Cell multi-index (j_0, …) of a tree-ordered flat index, where j_0 is the
/// most significant digit.
fn tree_to_cell(flat: usize, n: usize, dim: usize) -> Vec<usize> {
    let mask = (1usize << n) - 1;
    (0..dim).map(|d| (flat >> (n * (dim - 1 - d))) & mask).collect()
}

/// Rotation angles per tree level. Level ℓ holds 2^ℓ angles, one per prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTree {
    pub levels: Vec<Vec<f64>>,
}

/// ψ² mass of each grid cell [x_j − h/2, x_j + h/2] (per dimension), in
/// tree order. Composite Simpson with `quadrature_points` panels across the
/// domain, at least one per cell.
pub fn cell_masses(f: &TargetFunction, n: usize, quadrature_points: usize) -> Result<Vec<f64>> {
    let dim = f.dimension();
    let cells = 1usize << n;
    let h = 2.0 / cells as f64;
    let per_cell = quadrature_points.div_ceil(cells).max(1);
    let rules: Vec<Vec<(f64, f64)>> = (0..cells)
        .map(|j| {
            let c = grid_point(j, n);
            simpson_points(c - 0.5 * h, c + 0.5 * h, per_cell)
        })
        .collect();
    let mut masses = Vec::with_capacity(cells.pow(dim as u32));
    for flat in 0..cells.pow(dim as u32) {
        let js = tree_to_cell(flat, n, dim);
        let r: Vec<_> = js.iter().map(|&j| rules[j].clone()).collect();
        let mass = tensor_integral(&r, &|x| f.evaluate(x).powi(2));
        if !(mass >= 0.0) || !mass.is_finite() {
            let x = js.iter().map(|&j| grid_point(j, n)).collect();
            return Err(Error::BadIntegrand { x, value: mass });
        }
        masses.push(mass);
    }
    Ok(masses)
}

/// Angle θ = 2·arccos(√(L/(L+R))) for each tree node; empty nodes get π/2.
pub fn angles_from_masses(masses: &[f64]) -> AngleTree {
    let depth = masses.len().trailing_zeros() as usize;
    // sums[ℓ][i]: mass of prefix i at level ℓ
    let mut sums = vec![masses.to_vec()];
    for _ in 0..depth {
        let prev = sums.last().unwrap();
        sums.push(prev.chunks(2).map(|c| c[0] + c[1]).collect());
    }
    sums.reverse();
    let levels = (0..depth)
        .map(|l| {
            sums[l + 1]
                .chunks(2)
                .map(|c| {
                    let total = c[0] + c[1];
                    if total > 0.0 {
                        2.0 * (c[0] / total).sqrt().min(1.0).acos()
                    } else {
                        FRAC_PI_2
                    }
                })
                .collect()
        })
        .collect();
    AngleTree { levels }
}

/// Tree of Grover-Rudolph angles for `f` over D·n levels.
pub fn rotation_angles(f: &TargetFunction, n: usize, quadrature_points: usize) -> Result<AngleTree> {
    Ok(angles_from_masses(&cell_masses(f, n, quadrature_points)?))
}

/// Rounds θ to the nearest multiple of 2π/2^m. Returns the integer multiple
/// and the quantized angle.
pub fn quantize_angle(theta: f64, m: usize) -> (u64, f64) {
    let step = 2.0 * PI / (1u64 << m) as f64;
    let q = (theta / step).round().max(0.0) as u64 % (1u64 << m);
    (q, q as f64 * step)
}

/// Controls selecting prefix `i` of length `level` on the tree-ordered data qubits.
fn prefix_controls(data: &[usize], level: usize, i: usize) -> Vec<Control> {
    (0..level)
        .map(|l| Control { qubit: data[l], polarity: (i >> (level - 1 - l)) & 1 == 1 })
        .collect()
}

/// Encoder gates on an existing layout.
///
/// `data` lists the data qubits in tree order (most significant bit of
/// dimension 0 first). With `m = Some(bits)` the first `bits` qubits of
/// `work` hold the quantized angle while a level is applied and are
/// returned to |0⟩ afterwards.
pub fn build_encoder_on(
    name: &str,
    tree: &AngleTree,
    m: Option<usize>,
    layout: &QubitLayout,
    data: &[usize],
    work: &[usize],
) -> Result<Circuit> {
    if tree.levels.len() != data.len() {
        return Err(Error::LayoutMismatch(format!(
            "angle tree has {} levels for {} data qubits",
            tree.levels.len(),
            data.len()
        )));
    }
    if let Some(bits) = m {
        if work.len() < bits {
            return Err(Error::LayoutMismatch(format!("{bits} angle qubits needed, {} given", work.len())));
        }
    }
    let mut c = Circuit::new(name, layout.clone());
    for (level, angles) in tree.levels.iter().enumerate() {
        let target = data[level];
        match m {
            None => {
                for (i, &theta) in angles.iter().enumerate() {
                    c.push(Gate::ry(target, theta).controlled(prefix_controls(data, level, i)))?;
                }
            }
            Some(bits) if level == 0 => {
                let (q, quantized) = quantize_angle(angles[0], bits);
                if q != 0 {
                    c.push(Gate::ry(target, quantized))?;
                }
            }
            Some(bits) => {
                let step = 2.0 * PI / (1u64 << bits) as f64;
                let mut load = Vec::new();
                for (i, &theta) in angles.iter().enumerate() {
                    let (q, _) = quantize_angle(theta, bits);
                    for b in 0..bits {
                        if (q >> b) & 1 == 1 {
                            load.push(Gate::x(work[b]).controlled(prefix_controls(data, level, i)));
                        }
                    }
                }
                if load.is_empty() {
                    continue;
                }
                for g in &load {
                    c.push(g.clone())?;
                }
                for b in 0..bits {
                    let theta = step * (1u64 << b) as f64;
                    c.push(Gate::ry(target, theta).ctrl(work[b]))?;
                }
                for g in load.iter().rev() {
                    c.push(g.clone())?;
                }
            }
        }
    }
    Ok(c)
}

/// Layout `x0 … x{D−1}` (n qubits each) followed by `anc` (m qubits, if any).
pub fn encoder_layout(cfg: &EncodingConfig) -> Result<QubitLayout> {
    let mut regs: Vec<(String, usize)> = (0..cfg.dimension).map(|d| (format!("x{d}"), cfg.n)).collect();
    if let Some(m) = cfg.m {
        regs.push(("anc".into(), m));
    }
    QubitLayout::new(&regs)
}

/// Data qubits of `x0 … x{D−1}` in tree order.
pub fn tree_order_qubits(layout: &QubitLayout, n: usize, dimension: usize) -> Result<Vec<usize>> {
    let mut q = Vec::with_capacity(n * dimension);
    for d in 0..dimension {
        for b in (0..n).rev() {
            q.push(layout.qubit(&format!("x{d}"), b)?);
        }
    }
    Ok(q)
}

/// Standalone encoder U_ψ on the layout of [`encoder_layout`].
pub fn build_encoder(f: &TargetFunction, cfg: &EncodingConfig) -> Result<Circuit> {
    cfg.validate()?;
    if f.dimension() != cfg.dimension {
        return Err(Error::InvalidParameter(format!(
            "function is {}-dimensional, config says {}",
            f.dimension(),
            cfg.dimension
        )));
    }
    if cfg.total_qubits() > cfg.qubit_cap {
        return Err(Error::ResourceCap { needed: cfg.total_qubits(), cap: cfg.qubit_cap });
    }
    let layout = encoder_layout(cfg)?;
    let tree = rotation_angles(f, cfg.n, cfg.quadrature_points)?;
    let data = tree_order_qubits(&layout, cfg.n, cfg.dimension)?;
    let work = match cfg.m {
        Some(_) => layout.register("anc")?.qubits(),
        None => Vec::new(),
    };
    build_encoder_on("U_psi", &tree, cfg.m, &layout, &data, &work)
}

/// ψ(x_j)/√N over the grid, indexed by [`state_index`], with N = Σ ψ(x_j)².
pub fn grid_amplitudes(f: &TargetFunction, n: usize) -> Vec<f64> {
    let dim = f.dimension();
    let cells = 1usize << n;
    let total = cells.pow(dim as u32);
    let mut amps = vec![0.0; total];
    let mut js = vec![0usize; dim];
    for (idx, a) in amps.iter_mut().enumerate() {
        for (d, j) in js.iter_mut().enumerate() {
            *j = (idx >> (n * d)) & (cells - 1);
        }
        let x: Vec<f64> = js.iter().map(|&j| grid_point(j, n)).collect();
        *a = f.evaluate(&x);
    }
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    amps
}

/// Writes ψ(x_j)/√N straight into a state on `layout`, whose leading
/// registers must be the data registers; all other registers are |0⟩.
pub fn exact_injection_on(f: &TargetFunction, n: usize, layout: QubitLayout) -> Result<StateVector> {
    let amps = grid_amplitudes(f, n);
    let mut full = vec![Complex64::new(0.0, 0.0); layout.dimension()];
    if amps.len() > full.len() {
        return Err(Error::LayoutMismatch("layout smaller than the data registers".into()));
    }
    for (i, a) in amps.iter().enumerate() {
        full[i] = Complex64::new(*a, 0.0);
    }
    StateVector::from_amplitudes(layout, full)
}

/// [`exact_injection_on`] over the data registers alone.
pub fn exact_injection(f: &TargetFunction, n: usize) -> Result<StateVector> {
    let layout = encoder_layout(&EncodingConfig::new(n, None, f.dimension()))?;
    exact_injection_on(f, n, layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EncodingError {
    pub max_abs: f64,
    /// Discrete L2 norm with cell volume (2/2^n)^D.
    pub l2: f64,
}

/// Rescaled amplitudes √(2^{D(n−1)})·a_j, read with every non-data
/// register at |0⟩, in [`state_index`] order.
pub fn rescaled_amplitudes(state: &StateVector) -> Result<(usize, usize, Vec<f64>)> {
    let layout = state.layout();
    let mut dim = 0;
    while layout.has_register(&format!("x{dim}")) {
        dim += 1;
    }
    if dim == 0 {
        return Err(Error::UnknownRegister("x0".into()));
    }
    let n = layout.register("x0")?.width;
    let cells = 1usize << (n * dim);
    let scale = ((1u64 << (n - 1)) as f64).powi(dim as i32).sqrt();
    let vals = (0..cells).map(|i| scale * state.amplitude(i).re).collect();
    Ok((n, dim, vals))
}

/// Compares rescaled amplitudes with ψ(x_j) on the grid.
pub fn encoding_error(state: &StateVector, f: &TargetFunction) -> Result<EncodingError> {
    let (n, dim, vals) = rescaled_amplitudes(state)?;
    if dim != f.dimension() {
        return Err(Error::LayoutMismatch(format!("state has {dim} data registers, function is {}-D", f.dimension())));
    }
    let cells = 1usize << n;
    let mut max_abs = 0.0f64;
    let mut sq = 0.0;
    for (idx, v) in vals.iter().enumerate() {
        let x: Vec<f64> = (0..dim).map(|d| grid_point((idx >> (n * d)) & (cells - 1), n)).collect();
        let e = (v - f.evaluate(&x)).abs();
        max_abs = max_abs.max(e);
        sq += e * e;
    }
    let vol = (2.0 / cells as f64).powi(dim as i32);
    Ok(EncodingError { max_abs, l2: (sq * vol).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(f: &TargetFunction, n: usize, m: Option<usize>) -> StateVector {
        let cfg = EncodingConfig::new(n, m, f.dimension());
        let c = build_encoder(f, &cfg).unwrap();
        StateVector::zero(c.layout().clone()).run(&c).unwrap()
    }

    #[test]
    fn constant_gives_uniform_angles() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        let tree = rotation_angles(&f, 4, 1024).unwrap();
        for level in &tree.levels {
            for &t in level {
                assert!((t - FRAC_PI_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn left_supported_function_has_zero_root_angle() {
        let f = TargetFunction::new("left", 1, 1.0, |x| if x[0] < -0.2 { 1.0 } else { 0.0 }).unwrap();
        let tree = rotation_angles(&f, 3, 1024).unwrap();
        assert!(tree.levels[0][0].abs() < 1e-12);
        // empty right subtree uses the uniform convention
        assert_eq!(tree.levels[1][1], FRAC_PI_2);
    }

    #[test]
    fn single_qubit_constant() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        let cfg = EncodingConfig::new(1, Some(12), 1);
        let c = build_encoder(&f, &cfg).unwrap();
        assert_eq!(c.gates().len(), 1);
        assert_eq!(c.gates()[0].theta(), Some(FRAC_PI_2));
        let s = StateVector::zero(c.layout().clone()).run(&c).unwrap();
        assert!((s.amplitude(0).re - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((s.amplitude(1).re - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_angles_match_grid_values() {
        let f = TargetFunction::from_label("paper-sine-exp", 1).unwrap();
        let s = encode(&f, 5, None);
        let want = grid_amplitudes(&f, 5);
        for (j, w) in want.iter().enumerate() {
            assert!((s.amplitude(j).re - w).abs() < 1e-3);
        }
        assert!((s.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quantized_encoder_restores_ancillas() {
        let f = TargetFunction::from_label("paper-sine-exp", 1).unwrap();
        let s = encode(&f, 4, Some(5));
        let anc = s.layout().register("anc").unwrap().clone();
        let leak = s.subspace_probability(|j| anc.value_of(j) != 0);
        assert!(leak < 1e-24);
        for a in s.amplitudes() {
            assert!(a.re > -1e-10 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn quantization_rounds_to_nearest() {
        let step = 2.0 * PI / 64.0;
        assert_eq!(quantize_angle(2.4 * step, 6).0, 2);
        assert_eq!(quantize_angle(2.6 * step, 6).0, 3);
        assert_eq!(quantize_angle(PI, 6).0, 32);
        assert_eq!(quantize_angle(0.0, 1).1, 0.0);
    }

    #[test]
    fn product_encodes_as_tensor_product() {
        let f = TargetFunction::from_label("product-2d", 2).unwrap();
        let g = TargetFunction::new("g", 1, 1.0, |x| 2.0 + (2.0 * x[0]).sin()).unwrap().normalized().unwrap();
        let h = TargetFunction::new("h", 1, 1.0, |x| (0.5 * x[0]).exp()).unwrap().normalized().unwrap();
        let n = 3;
        let s = encode(&f, n, None);
        let sg = encode(&g, n, None);
        let sh = encode(&h, n, None);
        for j0 in 0..8 {
            for j1 in 0..8 {
                let want = sg.amplitude(j0).re * sh.amplitude(j1).re;
                let got = s.amplitude(state_index(&[j0, j1], n)).re;
                assert!((got - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_injection_has_zero_encoding_error() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        let s = exact_injection(&f, 4).unwrap();
        assert!(encoding_error(&s, &f).unwrap().max_abs < 1e-10);
    }

    #[test]
    fn resource_cap_is_enforced() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        let mut cfg = EncodingConfig::new(6, Some(6), 1);
        cfg.qubit_cap = 10;
        assert!(matches!(build_encoder(&f, &cfg), Err(Error::ResourceCap { needed: 12, cap: 10 })));
    }
}
