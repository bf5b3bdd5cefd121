#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use solext::chebyshev::{fit, make_grid, FitMethod, InterpolantTensor, Provenance, SampleSet};
use solext::comparator::{build_indicator, build_reflection, oracle_layout, ThresholdVector};
use solext::encoding::{
    build_encoder_on, exact_injection, grid_amplitudes, grid_point, rotation_angles, tree_order_qubits,
    TargetFunction,
};
use solext::pipeline::{run_extraction, ExperimentConfig, NodeSpec, SamplingMode};
use solext::precondition::{a_shift_closed_form_dim, apply_shift_to_state, ShiftParams};
use solext::qae::{build_grover, exact_amplitude};
use solext::rng::seeded;
use solext::sim::{unitary_of, Gate, StateVector};

pub fn sine_exp() -> TargetFunction {
    TargetFunction::from_label("paper-sine-exp", 1).unwrap()
}

/// Mismatches between the indicator circuit and the classical indicator
/// over every threshold vector and every data input, for one (n, D).
///
/// Each threshold runs once on the uniform superposition of the data
/// registers; a correct reversible indicator maps it to
/// Σ_j |j⟩|f(j)⟩/√N with all scratch back at |0⟩.
pub fn comparator_mismatches(n: usize, d: usize) -> usize {
    let layout = oracle_layout(n, d).unwrap();
    let res = layout.qubit("res", 0).unwrap();
    let inputs = 1usize << (n * d);
    let amp = (inputs as f64).sqrt().recip();
    let mut uniform = StateVector::zero(layout.clone());
    for q in 0..n * d {
        uniform.apply_gate(&Gate::h(q)).unwrap();
    }
    let side = (1u64 << n) + 1;
    let mut mismatches = 0;
    for flat in 0..side.pow(d as u32) {
        let k: Vec<u64> = (0..d).map(|i| (flat / side.pow(i as u32)) % side).collect();
        let tv = ThresholdVector::new(k, n).unwrap();
        let out = uniform.clone().run(&build_indicator(n, d, &tv).unwrap()).unwrap();
        for j in 0..inputs {
            let expected = j | (usize::from(tv.contains_index(j)) << res);
            if (out.amplitude(expected) - Complex64::new(amp, 0.0)).norm() > 1e-9 {
                mismatches += 1;
            }
        }
    }
    mismatches
}

/// Σ_{j<k} ψ(x_j)²/N for k = 0..=2ⁿ.
pub fn riemann_partial_sums(f: &TargetFunction, n: usize) -> Vec<f64> {
    let amps = grid_amplitudes(f, n);
    let mut sums = vec![0.0];
    for a in amps {
        sums.push(sums.last().unwrap() + a * a);
    }
    sums
}

/// max_k |Σ_{j<k} ψ(x_j)²/N − Ψ(k/2^{n−1} − 1)|.
pub fn riemann_gap(f: &TargetFunction, n: usize) -> f64 {
    riemann_partial_sums(f, n)
        .iter()
        .enumerate()
        .map(|(k, s)| (s - f.cumulative(&[k as f64 / (1u64 << (n - 1)) as f64 - 1.0])).abs())
        .fold(0.0, f64::max)
}

/// Dense spectral check of W for threshold `k` on an n-qubit, exact-angle
/// encoding of `f`. Returns (max |sin²(π·φ) − p| over eigenvectors that
/// overlap U|0⟩, total overlap weight of those eigenvectors).
///
/// W is unitary, so (W + W†)/2 is Hermitian with eigenvalues cos(2πφ) and
/// the same eigenvectors; sin²(πφ) = (1 − cos 2πφ)/2.
pub fn spectral_check(f: &TargetFunction, n: usize, k: u64) -> (f64, f64) {
    let layout = oracle_layout(n, 1).unwrap();
    let tree = rotation_angles(f, n, 1024).unwrap();
    let data = tree_order_qubits(&layout, n, 1).unwrap();
    let u = build_encoder_on("U", &tree, None, &layout, &data, &[]).unwrap();
    let tv = ThresholdVector::new(vec![k], n).unwrap();
    let w = build_grover(&u, &build_reflection(n, 1, &tv).unwrap()).unwrap();
    let p = exact_amplitude(&u, &tv).unwrap();
    let wm = unitary_of(&w.circuit).unwrap();
    let h: DMatrix<Complex64> = (&wm + wm.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let psi = StateVector::zero(layout).run(&u).unwrap();
    let psi = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let (mut worst, mut weight) = (0.0f64, 0.0);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let overlap = eig.eigenvectors.column(i).dotc(&psi).norm_sqr();
        if overlap > 1e-6 {
            worst = worst.max(((1.0 - lambda) / 2.0 - p).abs());
            weight += overlap;
        }
    }
    (worst, weight)
}

/// Random thresholds in 1..2ⁿ from a seeded stream.
pub fn random_thresholds(n: usize, count: usize, seed: u64) -> Vec<u64> {
    let mut rng = seeded(seed);
    (0..count).map(|_| rng.random_range(1..(1u64 << n))).collect()
}

/// max_j |√N₃·ã_j − a_shift·(ψ(x_j) + s)| for the injected state, with
/// N₃ = 2^{D(n−1)} and a_shift from the closed form.
pub fn shifted_amplitude_error(f: &TargetFunction, n: usize, alpha: f64) -> f64 {
    let d = f.dimension();
    let params = ShiftParams::new(alpha).unwrap();
    let psi = exact_injection(f, n).unwrap();
    let out = apply_shift_to_state(&psi, n * d, d, params).unwrap();
    let a = a_shift_closed_form_dim(alpha, f.l1_norm(), d).unwrap();
    let s = params.shift_constant(d);
    let scale = ((1u64 << (n - 1)) as f64).powi(d as i32).sqrt();
    let cells = 1usize << n;
    (0..cells.pow(d as u32))
        .map(|i| {
            let x: Vec<f64> = (0..d).map(|k| grid_point((i >> (n * k)) & (cells - 1), n)).collect();
            (scale * out.shifted_state.amplitude(i).re - a * (f.evaluate(&x) + s)).abs()
        })
        .fold(0.0, f64::max)
}

/// Noise-free extraction of `function` with the given nodes: continuous Ψ
/// at exact nodes. Returns the max extracted-ψ error on [−0.9, 0.9].
pub fn noise_free_error(function: &str, dimension: usize, nodes: NodeSpec, epsilon: f64) -> (usize, f64) {
    let cfg = ExperimentConfig {
        function: function.into(),
        dimension,
        nodes,
        epsilon,
        mode: SamplingMode::NoisyOracle,
        noise_sigma: Some(0.0),
        ..ExperimentConfig::default()
    };
    let r = run_extraction(&cfg).unwrap();
    (r.nodes_per_dimension, r.errors.extracted_psi.max_abs_interior)
}

/// Interpolant of `g` on M first-kind nodes.
pub fn interpolant(g: &dyn Fn(f64) -> f64, m: usize) -> InterpolantTensor {
    let grid = make_grid(m, 1, None).unwrap();
    fit(&SampleSet::from_fn(grid, Provenance::Exact, |_, x| g(x[0])), FitMethod::ExactSolve).unwrap()
}

/// (aliasing, truncation) of the M-node interpolant of `g`, as max norms
/// on a dense grid. The truncated series uses the first M coefficients of
/// a high-order reference interpolant.
pub fn aliasing_and_truncation(g: &dyn Fn(f64) -> f64, m: usize) -> (f64, f64) {
    const REFERENCE: usize = 96;
    let reference = interpolant(g, REFERENCE);
    let chebyshev_coeffs = |t: &InterpolantTensor| -> Vec<f64> {
        (0..t.m)
            .map(|j| t.coeffs[j] * if j == 0 { (1.0 / t.m as f64).sqrt() } else { (2.0 / t.m as f64).sqrt() })
            .collect()
    };
    let full = chebyshev_coeffs(&reference);
    let head = &full[..m];
    let interp = chebyshev_coeffs(&interpolant(g, m));
    let series = |c: &[f64], x: f64| -> f64 {
        solext::chebyshev::chebyshev_t(x, c.len()).iter().zip(c).map(|(t, a)| t * a).sum()
    };
    let (mut alias, mut trunc) = (0.0f64, 0.0f64);
    for i in 0..=2000 {
        let x = -1.0 + i as f64 / 1000.0;
        let projected = series(head, x);
        alias = alias.max((series(&interp, x) - projected).abs());
        trunc = trunc.max((g(x) - projected).abs());
    }
    (alias, trunc)
}

/// Ten normalized 1-D functions, some with min ψ = 0.
pub fn kappa_family() -> Vec<TargetFunction> {
    let custom: [(&str, fn(&[f64]) -> f64); 6] = [
        ("parabola", |x| x[0] * x[0]),
        ("bump", |x| 1.0 - x[0] * x[0]),
        ("ramp", |x| 1.0 + x[0]),
        ("cosine", |x| (std::f64::consts::PI * x[0]).cos() + 1.0),
        ("offset-sine", |x| 1.2 + (3.0 * x[0]).sin()),
        ("step-like", |x| 0.1 + 1.0 / (1.0 + (-8.0 * x[0]).exp())),
    ];
    let mut fs: Vec<TargetFunction> = ["paper-sine-exp", "constant", "gaussian", "gaussian(0.3)"]
        .iter()
        .map(|l| TargetFunction::from_label(l, 1).unwrap())
        .collect();
    fs.extend(custom.into_iter().map(|(l, g)| TargetFunction::new(l, 1, 2.0, g).unwrap().normalized().unwrap()));
    fs
}
