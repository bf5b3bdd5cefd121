//! Grover operator and amplitude estimation by phase estimation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::comparator::ThresholdVector;
use crate::error::{Error, Result};
use crate::sim::{Circuit, Control, Gate, StateVector};

/// W = −U·R₀·U†·R_f together with its parts.
#[derive(Debug, Clone)]
pub struct GroverOperator {
    pub circuit: Circuit,
    pub state_prep: Circuit,
    pub good_reflection: Circuit,
}

/// Gates of R₀ = I − 2|0⟩⟨0| over `qubits`.
pub fn zero_reflection_gates(qubits: &[usize]) -> Vec<Gate> {
    let (&target, rest) = qubits.split_first().expect("zero reflection needs a qubit");
    let z = Gate::z(target).controlled(rest.iter().map(|&q| Control::off(q)));
    vec![Gate::x(target), z, Gate::x(target)]
}

/// −I on one qubit as PHASE(π)·X·PHASE(π)·X.
pub fn minus_identity_gates(q: usize) -> Vec<Gate> {
    vec![Gate::phase(q, PI), Gate::x(q), Gate::phase(q, PI), Gate::x(q)]
}

/// W on R_f's layout, reflecting about |0⟩ on every qubit of U's layout.
pub fn build_grover(u: &Circuit, r_f: &Circuit) -> Result<GroverOperator> {
    let zero: Vec<usize> = (0..u.layout().total_qubits()).collect();
    build_grover_on(u, r_f, &zero)
}

/// W with R₀ over an explicit qubit set. `u` must live on a prefix of
/// R_f's layout.
pub fn build_grover_on(u: &Circuit, r_f: &Circuit, zero_qubits: &[usize]) -> Result<GroverOperator> {
    if !u.layout().is_prefix_of(r_f.layout()) {
        return Err(Error::LayoutMismatch(format!(
            "state preparation `{}` does not fit the layout of `{}`",
            u.name, r_f.name
        )));
    }
    if zero_qubits.is_empty() {
        return Err(Error::InvalidParameter("zero reflection needs at least one qubit".into()));
    }
    let u = u.widen(r_f.layout().clone())?;
    let mut w = Circuit::new("W", r_f.layout().clone());
    w.append_block(r_f, &[])?;
    w.append_block(&u.inverse(), &[])?;
    for g in zero_reflection_gates(zero_qubits) {
        w.push(g)?;
    }
    w.append_block(&u, &[])?;
    for g in minus_identity_gates(zero_qubits[0]) {
        w.push(g)?;
    }
    Ok(GroverOperator { circuit: w, state_prep: u, good_reflection: r_f.clone() })
}

/// Phase-estimation circuit over W's layout plus a `qpe` register of `k`
/// qubits: H on qpe, controlled-W^{2^t} on qpe_t by repetition, inverse QFT.
pub fn qpe_circuit(w: &Circuit, k: usize) -> Result<Circuit> {
    if k == 0 {
        return Err(Error::InvalidParameter("QPE needs at least one qubit".into()));
    }
    let layout = w.layout().clone().with_register("qpe", k)?;
    let qpe = layout.register("qpe")?.qubits();
    let mut c = Circuit::new("QPE", layout);
    let block = w.to_gate();
    for &q in &qpe {
        c.push(Gate::h(q))?;
    }
    for (t, &q) in qpe.iter().enumerate() {
        for _ in 0..(1usize << t) {
            c.push(block.clone().ctrl(q))?;
        }
    }
    c.push(Gate::inv_qft(&qpe))?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeEstimate {
    /// sin²(π·y/2^K) for the winning outcome y.
    pub p_hat: f64,
    /// Winning raw K-bit outcome.
    pub y: u64,
    pub phase_resolution: f64,
    pub shots: usize,
    /// Fraction of shots whose outcome gives the same p̂ as the winner.
    pub winning_fraction: f64,
    /// Fraction of shots on the winning raw outcome alone.
    pub raw_fraction: f64,
    pub k: usize,
    pub fold_before_vote: bool,
}

/// p̂ on the QPE grid for outcome `y`.
pub fn grid_value(y: u64, k: usize) -> f64 {
    (PI * y as f64 / (1u64 << k) as f64).sin().powi(2)
}

/// Majority vote over a QPE histogram. Ties go to the smaller outcome.
/// With `fold_before_vote`, y and 2^K − y are merged before voting.
pub fn vote(hist: &BTreeMap<u64, usize>, k: usize, fold_before_vote: bool) -> Result<AmplitudeEstimate> {
    let size = 1u64 << k;
    let fold = |y: u64| y.min((size - y) % size);
    let shots: usize = hist.values().sum();
    if shots == 0 {
        return Err(Error::InvalidParameter("empty QPE histogram".into()));
    }
    let mut tally: BTreeMap<u64, usize> = BTreeMap::new();
    for (&y, &c) in hist {
        let key = if fold_before_vote { fold(y) } else { y };
        *tally.entry(key).or_insert(0) += c;
    }
    // BTreeMap iterates ascending, so the first maximum is the smallest y.
    let (y, _) = tally.iter().fold((0u64, 0usize), |best, (&y, &c)| if c > best.1 { (y, c) } else { best });
    let p_hat = grid_value(y, k);
    let same: usize = hist.iter().filter(|(&v, _)| fold(v) == fold(y)).map(|(_, &c)| c).sum();
    let raw = hist.get(&y).copied().unwrap_or(0);
    Ok(AmplitudeEstimate {
        p_hat,
        y,
        phase_resolution: 1.0 / size as f64,
        shots,
        winning_fraction: same as f64 / shots as f64,
        raw_fraction: raw as f64 / shots as f64,
        k,
        fold_before_vote,
    })
}

/// Runs QPE on W from `init` (on W's layout) and votes over `shots` draws.
pub fn estimate_amplitude(
    w: &GroverOperator,
    init: &StateVector,
    k: usize,
    shots: usize,
    seed: u64,
    fold_before_vote: bool,
    qubit_cap: usize,
) -> Result<AmplitudeEstimate> {
    if init.layout() != w.circuit.layout() {
        return Err(Error::LayoutMismatch("initial state does not match the Grover operator layout".into()));
    }
    let needed = init.layout().total_qubits() + k;
    if needed > qubit_cap {
        return Err(Error::ResourceCap { needed, cap: qubit_cap });
    }
    let qpe = qpe_circuit(&w.circuit, k)?;
    let state = init.clone().extend("qpe", k)?.run(&qpe)?;
    let hist = state.sample_shots("qpe", shots, seed)?;
    vote(&hist, k, fold_before_vote)
}

/// Smallest T with π(2√(p(1−p)) + √(4p(1−p) + 4ε))/ε ≤ T.
pub fn required_iterations(epsilon: f64, p_worst: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain { what: "ε must lie in (0, 1)", value: epsilon });
    }
    if !(0.0..=1.0).contains(&p_worst) {
        return Err(Error::Domain { what: "p must lie in [0, 1]", value: p_worst });
    }
    let v = p_worst * (1.0 - p_worst);
    Ok((PI * (2.0 * v.sqrt() + (4.0 * v + 4.0 * epsilon).sqrt()) / epsilon).ceil() as u64)
}

/// Error bound 2π√(p(1−p))/T + π²/T².
pub fn qae_error_bound(p: f64, t: f64) -> f64 {
    2.0 * PI * (p * (1.0 - p)).sqrt() / t + PI * PI / (t * t)
}

/// Probability of the threshold box in U|0⟩ (data registers lowest).
pub fn exact_amplitude(u: &Circuit, k: &ThresholdVector) -> Result<f64> {
    let s = StateVector::zero(u.layout().clone()).run(u)?;
    Ok(s.subspace_probability(|j| k.contains_index(j)))
}

/// Single-qubit instance with good-state probability sin²θ: U = RY(2θ),
/// R_f = Z.
pub fn synthetic_grover(theta: f64) -> Result<GroverOperator> {
    let layout = crate::sim::QubitLayout::new(&[("q", 1)])?;
    let u = Circuit::new("U", layout.clone()).with(Gate::ry(0, 2.0 * theta))?;
    let r = Circuit::new("R_f", layout).with(Gate::z(0))?;
    build_grover(&u, &r)
}
