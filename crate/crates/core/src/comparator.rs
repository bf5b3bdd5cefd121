//! Threshold indicators f_k(j) = ∏ᵢ 1(jᵢ ≤ kᵢ − 1) from ripple-carry comparators.

use serde::Serialize;

use crate::encoding::DEFAULT_QUBIT_CAP;
use crate::error::{Error, Result};
use crate::sim::{Circuit, Control, Gate, QubitLayout};

/// Per-dimension thresholds kᵢ ∈ [0, 2ⁿ] describing the box {j : jᵢ < kᵢ}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdVector {
    k: Vec<u64>,
    n: usize,
}

impl ThresholdVector {
    pub fn new(k: Vec<u64>, n: usize) -> Result<Self> {
        let max = 1u64 << n;
        if k.is_empty() {
            return Err(Error::InvalidParameter("threshold vector is empty".into()));
        }
        if let Some(&bad) = k.iter().find(|&&ki| ki > max) {
            return Err(Error::ThresholdOutOfRange { k: bad, max });
        }
        Ok(ThresholdVector { k, n })
    }

    pub fn full(n: usize, dimension: usize) -> Self {
        ThresholdVector { k: vec![1u64 << n; dimension], n }
    }

    pub fn values(&self) -> &[u64] {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.k.len()
    }

    /// Classical indicator.
    pub fn contains(&self, js: &[u64]) -> bool {
        js.iter().zip(&self.k).all(|(j, k)| j < k)
    }

    /// Classical indicator on a basis index whose low D·n bits hold the
    /// data registers (x0 lowest).
    pub fn contains_index(&self, index: usize) -> bool {
        let mask = (1usize << self.n) - 1;
        self.k.iter().enumerate().all(|(d, &k)| (((index >> (self.n * d)) & mask) as u64) < k)
    }
}

/// MAJ step on (carry-in c, data b, constant a): afterwards `a` holds the carry out.
fn maj(c: usize, b: usize, a: usize) -> [Gate; 3] {
    [Gate::cx(a, b), Gate::cx(a, c), Gate::ccx(c, b, a)]
}

/// Comparator gates writing 1(x ≤ k − 1) into `out` (XOR).
///
/// `x` is the data register, least significant bit first. `work` needs
/// n + 1 qubits in |0⟩: n hold the constant 2ⁿ − k, the last is the carry
/// in. All scratch returns to |0⟩ and `x` is restored.
pub fn comparator_gates(x: &[usize], k: u64, work: &[usize], out: usize) -> Result<Vec<Gate>> {
    let n = x.len();
    let max = 1u64 << n;
    if k > max {
        return Err(Error::ThresholdOutOfRange { k, max });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if k == max {
        return Ok(vec![Gate::x(out)]);
    }
    if work.len() < n + 1 {
        return Err(Error::LayoutMismatch(format!("comparator needs {} scratch qubits, {} given", n + 1, work.len())));
    }
    let constant = max - k;
    let a = &work[..n];
    let carry_in = work[n];
    let mut load = Vec::new();
    for (i, &q) in a.iter().enumerate() {
        if (constant >> i) & 1 == 1 {
            load.push(Gate::x(q));
        }
    }
    let mut ladder = Vec::with_capacity(3 * n);
    for i in 0..n {
        let c = if i == 0 { carry_in } else { a[i - 1] };
        ladder.extend(maj(c, x[i], a[i]));
    }
    let mut gates = load.clone();
    gates.extend(ladder.iter().cloned());
    // carry out = 1(x + 2ⁿ − k ≥ 2ⁿ) = 1(x ≥ k); flip it for x < k
    gates.push(Gate::cx(a[n - 1], out));
    gates.push(Gate::x(out));
    gates.extend(ladder.iter().rev().map(Gate::inverse));
    gates.extend(load);
    Ok(gates)
}

/// Qubit roles for an indicator on a shared layout.
#[derive(Debug, Clone)]
pub struct OracleQubits {
    /// Data registers, least significant bit first, one per dimension.
    pub data: Vec<Vec<usize>>,
    /// At least n + 1 scratch qubits in |0⟩.
    pub work: Vec<usize>,
    /// One comparison bit per dimension.
    pub cmp: Vec<usize>,
    pub res: usize,
    /// Extra conditions on the good subspace (e.g. flag = 0).
    pub extra: Vec<Control>,
}

impl OracleQubits {
    /// Roles on a layout with registers `x0…`, `work`, `cmp`, `res`.
    pub fn from_layout(layout: &QubitLayout, dimension: usize) -> Result<Self> {
        Ok(OracleQubits {
            data: (0..dimension)
                .map(|d| layout.register(&format!("x{d}")).map(|r| r.qubits()))
                .collect::<Result<_>>()?,
            work: layout.register("work")?.qubits(),
            cmp: layout.register("cmp")?.qubits(),
            res: layout.qubit("res", 0)?,
            extra: Vec::new(),
        })
    }
}

/// U_{f_k}: flips `res` iff every per-dimension comparison holds and the
/// extra conditions are met; comparison bits are uncomputed.
pub fn indicator_gates(q: &OracleQubits, k: &ThresholdVector) -> Result<Vec<Gate>> {
    if q.data.len() != k.dimension() || q.cmp.len() < k.dimension() {
        return Err(Error::LayoutMismatch(format!(
            "threshold has {} dimensions, oracle has {} data registers",
            k.dimension(),
            q.data.len()
        )));
    }
    let mut compute = Vec::new();
    for (d, (&kd, x)) in k.values().iter().zip(&q.data).enumerate() {
        compute.extend(comparator_gates(x, kd, &q.work, q.cmp[d])?);
    }
    let mut gates = compute.clone();
    let mut copy = Gate::x(q.res);
    for &c in &q.cmp[..k.dimension()] {
        copy = copy.ctrl(c);
    }
    gates.push(copy.controlled(q.extra.iter().copied()));
    gates.extend(compute.iter().rev().map(Gate::inverse));
    Ok(gates)
}

/// R_{f_k} = U_{f_k} · Z(res) · U_{f_k}†.
pub fn reflection_gates(q: &OracleQubits, k: &ThresholdVector) -> Result<Vec<Gate>> {
    let u = indicator_gates(q, k)?;
    let mut gates = u.clone();
    gates.push(Gate::z(q.res));
    gates.extend(u.iter().rev().map(Gate::inverse));
    Ok(gates)
}

fn circuit_of(name: &str, layout: QubitLayout, gates: Vec<Gate>) -> Result<Circuit> {
    let mut c = Circuit::new(name, layout);
    for g in gates {
        c.push(g)?;
    }
    Ok(c)
}

/// Layout `x (n) | work (n + 1) | out (1)` with the comparator for `k`.
pub fn build_comparator(n: usize, k: u64) -> Result<Circuit> {
    let layout = QubitLayout::new(&[("x", n), ("work", n + 1), ("out", 1)])?;
    let x = layout.register("x")?.qubits();
    let work = layout.register("work")?.qubits();
    let out = layout.qubit("out", 0)?;
    let gates = comparator_gates(&x, k, &work, out)?;
    circuit_of("CMP", layout, gates)
}

/// Layout `x0 … x{D−1} (n each) | work (n + 1) | cmp (D) | res (1)`.
pub fn oracle_layout(n: usize, dimension: usize) -> Result<QubitLayout> {
    let mut regs: Vec<(String, usize)> = (0..dimension).map(|d| (format!("x{d}"), n)).collect();
    regs.push(("work".into(), n + 1));
    regs.push(("cmp".into(), dimension));
    regs.push(("res".into(), 1));
    let layout = QubitLayout::new(&regs)?;
    if layout.total_qubits() > DEFAULT_QUBIT_CAP {
        return Err(Error::ResourceCap { needed: layout.total_qubits(), cap: DEFAULT_QUBIT_CAP });
    }
    Ok(layout)
}

pub fn build_indicator(n: usize, dimension: usize, k: &ThresholdVector) -> Result<Circuit> {
    let layout = oracle_layout(n, dimension)?;
    let q = OracleQubits::from_layout(&layout, dimension)?;
    circuit_of("U_f", layout, indicator_gates(&q, k)?)
}

pub fn build_reflection(n: usize, dimension: usize, k: &ThresholdVector) -> Result<Circuit> {
    let layout = oracle_layout(n, dimension)?;
    let q = OracleQubits::from_layout(&layout, dimension)?;
    circuit_of("R_f", layout, reflection_gates(&q, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;

    fn compare(n: usize, k: u64, j: u64) -> (bool, bool) {
        let c = build_comparator(n, k).unwrap();
        let s = StateVector::basis(c.layout().clone(), j as usize).run(&c).unwrap();
        let out = c.layout().qubit("out", 0).unwrap();
        let expected = j as usize | (usize::from(j < k) << out);
        (s.amplitude(expected).re > 0.999, j < k)
    }

    #[test]
    fn comparator_truth_table() {
        for k in 0..=16 {
            for j in 0..16 {
                assert!(compare(4, k, j).0, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn comparator_toffoli_budget() {
        for n in 1..=8 {
            let c = build_comparator(n, 1).unwrap();
            assert_eq!(c.tally().toffoli_equivalent, 2 * n);
        }
        assert!(build_comparator(3, 9).is_err());
    }

    #[test]
    fn full_box_indicator() {
        let k = ThresholdVector::full(3, 2);
        let c = build_indicator(3, 2, &k).unwrap();
        let res = c.layout().qubit("res", 0).unwrap();
        for j in 0..64 {
            let s = StateVector::basis(c.layout().clone(), j).run(&c).unwrap();
            assert!((s.amplitude(j | (1 << res)).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_validation() {
        assert!(matches!(ThresholdVector::new(vec![17], 4), Err(Error::ThresholdOutOfRange { k: 17, max: 16 })));
        let t = ThresholdVector::new(vec![3, 5], 3).unwrap();
        assert!(t.contains(&[2, 4]) && !t.contains(&[3, 0]));
        assert!(t.contains_index(2 | (4 << 3)));
    }
}
