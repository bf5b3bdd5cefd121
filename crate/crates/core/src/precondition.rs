//! Shift of ψ towards the uniform state by interference on a flag qubit.

use serde::Serialize;

use crate::encoding::TargetFunction;
use crate::error::{Error, Result};
use crate::sim::{Circuit, Control, Gate, StateVector, POSTSELECTION_FLOOR};

/// Bounds on |a − ã| and |ã/a − 1| quoted for the midpoint estimate.
pub const MIDPOINT_ABS_BOUND: f64 = 0.12;
pub const MIDPOINT_REL_BOUND: f64 = 0.21;

/// Flag amplitudes α|0⟩ + β|1⟩ with α, β real and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ShiftParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain { what: "α must lie in (0, 1]", value: alpha });
        }
        Ok(ShiftParams { alpha, beta: (1.0 - alpha * alpha).max(0.0).sqrt() })
    }

    /// s = √(α⁻² − 1)·2^{−D/2}, the constant added to ψ.
    pub fn shift_constant(&self, dimension: usize) -> f64 {
        (self.alpha.powi(-2) - 1.0).max(0.0).sqrt() * 2f64.powf(-(dimension as f64) / 2.0)
    }
}

#[derive(Debug, Clone)]
pub struct ShiftOutcome {
    /// Probability of reading 0 on the flag.
    pub c: f64,
    /// α/√(2c).
    pub a_shift: f64,
    pub shift_constant: f64,
    /// Flag-0 branch, renormalized, over the state-preparation layout.
    pub shifted_state: StateVector,
}

/// Appends the interference sequence to `circuit`: RY(2·arccos α) on
/// `flag`, U_ψ controlled on flag = 0, H on every data qubit controlled on
/// flag = 1, then H on `flag`.
pub fn push_shift(
    circuit: &mut Circuit,
    u_psi: &Circuit,
    data: &[usize],
    flag: usize,
    params: ShiftParams,
) -> Result<()> {
    circuit.push(Gate::ry(flag, 2.0 * params.alpha.clamp(-1.0, 1.0).acos()))?;
    circuit.append_block(u_psi, &[Control::off(flag)])?;
    for &q in data {
        circuit.push(Gate::h(q).ctrl(flag))?;
    }
    circuit.push(Gate::h(flag))
}

/// Shift circuit over U_ψ's layout plus a `flag` register on top. The
/// uniform preparer acts on the first `n_total` qubits.
pub fn build_shift_circuit(u_psi: &Circuit, n_total: usize, params: ShiftParams) -> Result<Circuit> {
    let layout = u_psi.layout().clone().with_register("flag", 1)?;
    if n_total >= layout.total_qubits() {
        return Err(Error::InvalidParameter(format!("{n_total} data qubits exceed the encoder layout")));
    }
    let flag = layout.qubit("flag", 0)?;
    let mut c = Circuit::new("U_shift", layout);
    let data: Vec<usize> = (0..n_total).collect();
    push_shift(&mut c, u_psi, &data, flag, params)?;
    Ok(c)
}

/// Runs the shift circuit from |0⟩ and postselects flag = 0 exactly.
pub fn apply_shift(u_psi: &Circuit, n_total: usize, dimension: usize, params: ShiftParams) -> Result<ShiftOutcome> {
    let circuit = build_shift_circuit(u_psi, n_total, params)?;
    let state = StateVector::zero(circuit.layout().clone()).run(&circuit)?;
    shift_outcome(state, u_psi, dimension, params)
}

/// Shift applied to an explicit initial state |ψ⟩ on U_ψ's layout, as
/// produced by exact injection.
pub fn apply_shift_to_state(psi: &StateVector, n_total: usize, dimension: usize, params: ShiftParams) -> Result<ShiftOutcome> {
    let inner = psi.layout().clone();
    let mut s = psi.clone().extend("flag", 1)?;
    let flag = s.layout().qubit("flag", 0)?;
    // Flag-0 branch gets α|ψ⟩, flag-1 branch gets β|φ⟩.
    let dim = inner.dimension();
    let amps: Vec<_> = s.amplitudes().to_vec();
    let mut full = amps;
    for j in 0..dim {
        full[j + dim] = num_complex::Complex64::new(0.0, 0.0);
        full[j] *= params.alpha;
    }
    full[dim] = num_complex::Complex64::new(params.beta, 0.0);
    s = StateVector::from_amplitudes(s.layout().clone(), full)?;
    for q in 0..n_total {
        s.apply_gate(&Gate::h(q).ctrl(flag))?;
    }
    s.apply_gate(&Gate::h(flag))?;
    shift_outcome(s, &Circuit::new("U_psi", inner), dimension, params)
}

fn shift_outcome(state: StateVector, u_psi: &Circuit, dimension: usize, params: ShiftParams) -> Result<ShiftOutcome> {
    let flag = state.layout().qubit("flag", 0)?;
    let c = 1.0 - state.probability_one(flag);
    if c < POSTSELECTION_FLOOR {
        return Err(Error::DegeneratePostselection { probability: c });
    }
    let inner = u_psi.layout().dimension();
    let amps: Vec<_> = state.amplitudes()[..inner].iter().map(|a| a / c.sqrt()).collect();
    Ok(ShiftOutcome {
        c,
        a_shift: params.alpha / (2.0 * c).sqrt(),
        shift_constant: params.shift_constant(dimension),
        shifted_state: StateVector::from_amplitudes(u_psi.layout().clone(), amps)?,
    })
}

/// Closed-form P(flag = 0) = 1/2 + αβ·⟨ψ|φ⟩ for grid amplitudes `psi_amps`.
pub fn flag_zero_probability(psi_amps: &[f64], params: ShiftParams) -> f64 {
    let uniform = (psi_amps.len() as f64).sqrt().recip();
    0.5 + params.alpha * params.beta * uniform * psi_amps.iter().sum::<f64>()
}

/// a_shift = (α⁻² + √2·√(α⁻² − 1)·∫ψ)^{−1/2} for one dimension.
pub fn a_shift_closed_form(alpha: f64, l1_norm: f64) -> Result<f64> {
    a_shift_closed_form_dim(alpha, l1_norm, 1)
}

/// D-dimensional form: (α⁻² + 2^{1−D/2}·√(α⁻² − 1)·∫ψ)^{−1/2}, with
/// ∫ψ ∈ [0, 2^{D/2}].
pub fn a_shift_closed_form_dim(alpha: f64, l1_norm: f64, dimension: usize) -> Result<f64> {
    ShiftParams::new(alpha)?;
    let top = 2f64.powf(dimension as f64 / 2.0);
    if !(l1_norm >= 0.0 && l1_norm <= top * (1.0 + 1e-9)) {
        return Err(Error::Domain { what: "ℓ₁ norm must lie in [0, 2^{D/2}]", value: l1_norm });
    }
    let k = 2.0 / top;
    let inv2 = alpha.powi(-2);
    Ok((inv2 + k * (inv2 - 1.0).sqrt() * l1_norm).powf(-0.5))
}

/// Lower bound (α⁻² + 2√(α⁻² − 1))^{−1/2}, attained by constant ψ.
pub fn a_shift_lower_bound(alpha: f64) -> f64 {
    let inv2 = alpha.powi(-2);
    (inv2 + 2.0 * (inv2 - 1.0).max(0.0).sqrt()).powf(-0.5)
}

/// ℓ₁ bounds √(max(0, 2 − (4/3)Λ⁴)) ≤ ∫ψ ≤ √2.
pub fn l1_bounds(smoothness: f64) -> (f64, f64) {
    let lower = (2.0 - 4.0 / 3.0 * smoothness.powi(4)).max(0.0).sqrt();
    (lower, 2f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Midpoint {
    pub a_tilde: f64,
    pub abs_gap_bound: f64,
    pub rel_gap_bound: f64,
}

/// ã: midpoint of the lower bound and α.
pub fn a_shift_midpoint(alpha: f64) -> Result<Midpoint> {
    ShiftParams::new(alpha)?;
    Ok(Midpoint {
        a_tilde: 0.5 * (alpha + a_shift_lower_bound(alpha)),
        abs_gap_bound: MIDPOINT_ABS_BOUND,
        rel_gap_bound: MIDPOINT_REL_BOUND,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MidpointSweep {
    pub max_abs_gap: f64,
    pub max_rel_gap: f64,
    /// α at which each maximum occurs.
    pub alpha_abs: f64,
    pub alpha_rel: f64,
    pub within_abs_bound: bool,
    pub within_rel_bound: bool,
}

/// Largest |a − ã| and |ã/a − 1| over α ∈ `alphas` and `l1_points` values
/// of ∫ψ spread evenly over [0, √2].
pub fn midpoint_sweep(alphas: &[f64], l1_points: usize) -> Result<MidpointSweep> {
    let mut out = MidpointSweep {
        max_abs_gap: 0.0,
        max_rel_gap: 0.0,
        alpha_abs: f64::NAN,
        alpha_rel: f64::NAN,
        within_abs_bound: true,
        within_rel_bound: true,
    };
    let steps = l1_points.max(2) - 1;
    for &alpha in alphas {
        let mid = a_shift_midpoint(alpha)?.a_tilde;
        for i in 0..=steps {
            let l1 = 2f64.sqrt() * i as f64 / steps as f64;
            let a = a_shift_closed_form(alpha, l1)?;
            let abs = (a - mid).abs();
            let rel = (mid / a - 1.0).abs();
            if abs > out.max_abs_gap {
                out.max_abs_gap = abs;
                out.alpha_abs = alpha;
            }
            if rel > out.max_rel_gap {
                out.max_rel_gap = rel;
                out.alpha_rel = alpha;
            }
        }
    }
    out.within_abs_bound = out.max_abs_gap <= MIDPOINT_ABS_BOUND;
    out.within_rel_bound = out.max_rel_gap <= MIDPOINT_REL_BOUND;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionNumbers {
    /// `f64::INFINITY` when min ψ = 0.
    pub kappa_before: f64,
    pub kappa_after: f64,
}

/// max ψ / min ψ on a uniform tensor grid with `grid` points per dimension,
/// before and after adding the shift constant.
pub fn condition_numbers(f: &TargetFunction, params: ShiftParams, grid: usize) -> Result<ConditionNumbers> {
    let grid = grid.max(2);
    let dim = f.dimension();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut x = vec![0.0; dim];
    for flat in 0..grid.pow(dim as u32) {
        let mut r = flat;
        for xd in x.iter_mut() {
            *xd = -1.0 + 2.0 * (r % grid) as f64 / (grid - 1) as f64;
            r /= grid;
        }
        let v = f.evaluate(&x);
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::BadIntegrand { x: x.clone(), value: v });
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let s = params.shift_constant(dim);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    Ok(ConditionNumbers { kappa_before: ratio(hi, lo), kappa_after: ratio(hi + s, lo + s) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_encoder, exact_injection, grid_amplitudes, EncodingConfig};

    #[test]
    fn params_validate() {
        assert!(ShiftParams::new(0.0).is_err());
        assert!(ShiftParams::new(1.2).is_err());
        let p = ShiftParams::new(0.6).unwrap();
        assert!((p.alpha.powi(2) + p.beta.powi(2) - 1.0).abs() < 1e-14);
        assert!((ShiftParams::new(0.7).unwrap().shift_constant(1) - 0.7213932).abs() < 1e-7);
    }

    #[test]
    fn uniform_function_closed_form() {
        let f = TargetFunction::from_label("constant", 1).unwrap();
        let u = build_encoder(&f, &EncodingConfig::new(4, None, 1)).unwrap();
        let out = apply_shift(&u, 4, 1, ShiftParams::new(0.6).unwrap()).unwrap();
        assert!((out.c - 0.98).abs() < 1e-12);
        assert!((out.a_shift - 0.6 / 1.96f64.sqrt()).abs() < 1e-12);
        // flag-0 branch is the uniform state again
        for a in out.shifted_state.amplitudes() {
            assert!((a.re - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_one_has_no_interference() {
        let f = TargetFunction::from_label("paper-sine-exp", 1).unwrap();
        let s = exact_injection(&f, 4).unwrap();
        let out = apply_shift_to_state(&s, 4, 1, ShiftParams::new(1.0).unwrap()).unwrap();
        assert!((out.c - 0.5).abs() < 1e-12);
        assert!((out.a_shift - 1.0).abs() < 1e-12);
        for (a, b) in out.shifted_state.amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn flag_probability_matches_amplitude_sum() {
        let f = TargetFunction::from_label("paper-sine-exp", 1).unwrap();
        let p = ShiftParams::new(0.8).unwrap();
        let s = exact_injection(&f, 5).unwrap();
        let out = apply_shift_to_state(&s, 5, 1, p).unwrap();
        let want = flag_zero_probability(&grid_amplitudes(&f, 5), p);
        assert!((out.c - want).abs() < 1e-12);
    }

    #[test]
    fn closed_form_limits() {
        assert!((a_shift_closed_form(1.0, 0.7).unwrap() - 1.0).abs() < 1e-15);
        let a = 0.5;
        let lower = a_shift_closed_form(a, 2f64.sqrt()).unwrap();
        assert!((lower - a_shift_lower_bound(a)).abs() < 1e-15);
        assert!((a_shift_closed_form(a, 0.0).unwrap() - a).abs() < 1e-15);
        assert!(a_shift_closed_form(a, 1.5).is_err());
        assert!(a_shift_closed_form(a, -0.1).is_err());
    }

    #[test]
    fn l1_bound_values() {
        let (lo, hi) = l1_bounds(1e-3);
        assert!((lo - 2f64.sqrt()).abs() < 1e-9 && hi == 2f64.sqrt());
        assert!(l1_bounds(1.5f64.powf(0.25)).0 < 1e-7);
        assert!((l1_bounds(1.0).0 - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(l1_bounds(3.0).0, 0.0);
    }

    #[test]
    fn midpoint_at_alpha_one() {
        let m = a_shift_midpoint(1.0).unwrap();
        assert!((m.a_tilde - 1.0).abs() < 1e-15);
    }

    #[test]
    fn condition_number_cases() {
        let p = ShiftParams::new(0.7).unwrap();
        let c = condition_numbers(&TargetFunction::from_label("constant", 1).unwrap(), p, 64).unwrap();
        assert!((c.kappa_before - 1.0).abs() < 1e-12 && (c.kappa_after - 1.0).abs() < 1e-12);
        let sq = TargetFunction::new("x2", 1, 2.0, |x| x[0] * x[0]).unwrap();
        let c = condition_numbers(&sq, p, 65).unwrap();
        assert!(c.kappa_before.is_infinite() && c.kappa_after.is_finite());
        let c = condition_numbers(&sq, ShiftParams::new(1.0).unwrap(), 65).unwrap();
        assert!(c.kappa_after.is_infinite());
    }
}
