mod common;

use solext::encoding::{build_encoder, EncodingConfig};
use solext::precondition::{
    a_shift_closed_form, a_shift_lower_bound, apply_shift, apply_shift_to_state, condition_numbers,
    flag_zero_probability, midpoint_sweep, ShiftParams, MIDPOINT_ABS_BOUND, MIDPOINT_REL_BOUND,
};
use solext::sim::StateVector;

#[test]
fn shift_never_worsens_the_condition_number() {
    let fs = common::kappa_family();
    assert_eq!(fs.len(), 10);
    let mut saw_zero = false;
    for f in &fs {
        for alpha in [0.3, 0.7, 0.95] {
            let k = condition_numbers(f, ShiftParams::new(alpha).unwrap(), 401).unwrap();
            assert!(k.kappa_after <= k.kappa_before, "{} α={alpha}: {k:?}", f.label());
            assert!(k.kappa_after.is_finite());
            saw_zero |= k.kappa_before.is_infinite();
        }
    }
    assert!(saw_zero, "family needs a function with min ψ = 0");
}

#[test]
fn shifted_amplitudes_converge_linearly_in_grid_spacing() {
    let f = common::sine_exp();
    let errs: Vec<f64> = (4..=8).map(|n| common::shifted_amplitude_error(&f, n, 0.7)).collect();
    assert!((errs[0] - 1.0952e-2).abs() < 1e-5, "{errs:?}");
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn shift_circuit_matches_direct_interference() {
    let f = common::sine_exp();
    let n = 4;
    let u = build_encoder(&f, &EncodingConfig::new(n, None, 1)).unwrap();
    let params = ShiftParams::new(0.6).unwrap();
    let via_circuit = apply_shift(&u, n, 1, params).unwrap();
    let psi = StateVector::zero(u.layout().clone()).run(&u).unwrap();
    let direct = apply_shift_to_state(&psi, n, 1, params).unwrap();
    assert!((via_circuit.c - direct.c).abs() < 1e-12);
    for (a, b) in via_circuit.shifted_state.amplitudes().iter().zip(direct.shifted_state.amplitudes()) {
        assert!((a - b).norm() < 1e-12);
    }
    let amps: Vec<f64> = psi.amplitudes()[..1 << n].iter().map(|a| a.re).collect();
    assert!((flag_zero_probability(&amps, params) - direct.c).abs() < 1e-12);
}

#[test]
fn closed_form_is_bracketed() {
    for alpha in [0.1, 0.5, 0.9] {
        let lo = a_shift_closed_form(alpha, 2f64.sqrt()).unwrap();
        let hi = a_shift_closed_form(alpha, 0.0).unwrap();
        assert!((lo - a_shift_lower_bound(alpha)).abs() < 1e-12);
        assert!((hi - alpha).abs() < 1e-12);
    }
    assert!(a_shift_closed_form(0.5, 1.5).is_err());
}

#[test]
fn midpoint_sweep_maxima() {
    let alphas: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let s = midpoint_sweep(&alphas, 201).unwrap();
    assert!((s.max_abs_gap - 0.11630930842274323).abs() < 1e-12, "{s:?}");
    assert!((s.max_rel_gap - 0.207100837829165).abs() < 1e-12, "{s:?}");
    assert_eq!((s.alpha_abs, s.alpha_rel), (0.85, 0.71));
    assert!(s.max_abs_gap <= MIDPOINT_ABS_BOUND && s.within_abs_bound);
    assert!(s.max_rel_gap <= MIDPOINT_REL_BOUND && s.within_rel_bound);
}
