use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::circuit::Circuit;
use super::gate::{Gate, GateKind};
use super::layout::QubitLayout;
use crate::error::{Error, Result};
use crate::rng::seeded;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Below this probability a forced measurement branch is treated as empty.
pub const POSTSELECTION_FLOOR: f64 = 1e-14;

/// Dense amplitude array indexed by the integer basis label.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: QubitLayout,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub outcome: bool,
    pub probability: f64,
    pub state: StateVector,
}

#[derive(Clone, Copy)]
enum OneQubit {
    H,
    X,
    Ry { c: f64, s: f64 },
    Diag(Complex64),
}

impl StateVector {
    /// |0…0⟩ over `layout`.
    pub fn zero(layout: QubitLayout) -> Self {
        Self::basis(layout, 0)
    }

    pub fn basis(layout: QubitLayout, index: usize) -> Self {
        let mut amps = vec![ZERO; layout.dimension()];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { layout, amps }
    }

    pub fn from_amplitudes(layout: QubitLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.dimension() {
            return Err(Error::AmplitudeLength { got: amps.len(), expected: layout.dimension() });
        }
        Ok(StateVector { layout, amps })
    }

    pub fn from_real(layout: QubitLayout, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(layout, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Appends a zero-initialized register on top of the layout.
    pub fn extend(mut self, name: &str, width: usize) -> Result<Self> {
        self.layout = self.layout.with_register(name, width)?;
        self.amps.resize(self.layout.dimension(), ZERO);
        Ok(self)
    }

    pub fn apply(mut self, gate: &Gate) -> Result<Self> {
        self.apply_gate(gate)?;
        Ok(self)
    }

    pub fn run(mut self, circuit: &Circuit) -> Result<Self> {
        self.apply_circuit(circuit)?;
        Ok(self)
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.layout.total_qubits())?;
        self.apply_masked(gate, 0, 0);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.layout() != &self.layout {
            return Err(Error::LayoutMismatch(format!(
                "circuit `{}` layout differs from state layout",
                circuit.name
            )));
        }
        // Gates were validated when pushed.
        for g in circuit.gates() {
            self.apply_masked(g, 0, 0);
        }
        Ok(())
    }

    fn apply_masked(&mut self, gate: &Gate, outer_mask: usize, outer_value: usize) {
        let mut mask = outer_mask;
        let mut value = outer_value;
        for c in &gate.controls {
            mask |= 1 << c.qubit;
            if c.polarity {
                value |= 1 << c.qubit;
            }
        }
        let op = match &gate.kind {
            GateKind::H => OneQubit::H,
            GateKind::X => OneQubit::X,
            GateKind::Z => OneQubit::Diag(Complex64::new(-1.0, 0.0)),
            GateKind::Ry(t) => OneQubit::Ry { c: (t / 2.0).cos(), s: (t / 2.0).sin() },
            GateKind::Phase(t) => OneQubit::Diag(Complex64::from_polar(1.0, *t)),
            GateKind::Swap => {
                self.swap_masked(gate.targets[0], gate.targets[1], mask, value);
                return;
            }
            GateKind::Qft | GateKind::InvQft => {
                let expanded = gate.expand_fourier().expect("fourier gate");
                for g in &expanded {
                    // Controls of the QFT gate were copied onto each expanded gate.
                    self.apply_masked(g, outer_mask, outer_value);
                }
                return;
            }
            GateKind::Block(b) => {
                for g in &b.gates {
                    self.apply_masked(g, mask, value);
                }
                return;
            }
        };
        self.one_qubit(gate.targets[0], mask, value, op);
    }

    fn one_qubit(&mut self, target: usize, mask: usize, value: usize, op: OneQubit) {
        let bit = 1usize << target;
        let amps = &mut self.amps;
        match op {
            OneQubit::Diag(phase) => {
                for_each_index(amps.len(), mask | bit, value | bit, |i| amps[i] *= phase);
            }
            OneQubit::X => {
                for_each_index(amps.len(), mask | bit, value, |i| amps.swap(i, i | bit));
            }
            OneQubit::H => {
                let r = FRAC_1_SQRT_2;
                for_each_index(amps.len(), mask | bit, value, |i| {
                    let (a, b) = (amps[i], amps[i | bit]);
                    amps[i] = (a + b) * r;
                    amps[i | bit] = (a - b) * r;
                });
            }
            OneQubit::Ry { c, s } => {
                for_each_index(amps.len(), mask | bit, value, |i| {
                    let (a, b) = (amps[i], amps[i | bit]);
                    amps[i] = a * c - b * s;
                    amps[i | bit] = a * s + b * c;
                });
            }
        }
    }

    fn swap_masked(&mut self, a: usize, b: usize, mask: usize, value: usize) {
        let (ba, bb) = (1usize << a, 1usize << b);
        let amps = &mut self.amps;
        for_each_index(amps.len(), mask | ba | bb, value | bb, |i| amps.swap(i, i ^ ba ^ bb));
    }

    /// Σ |amp_j|² over basis states where `predicate(j)` holds.
    pub fn subspace_probability(&self, predicate: impl Fn(usize) -> bool) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(j, _)| predicate(*j))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Probability of reading `1` on `qubit`.
    pub fn probability_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.subspace_probability(|j| j & bit != 0)
    }

    /// Projective measurement. A forced outcome selects that branch
    /// deterministically (postselection); otherwise it is drawn from `rng`.
    pub fn measure_qubit<R: Rng + ?Sized>(
        self,
        qubit: usize,
        forced: Option<bool>,
        rng: &mut R,
    ) -> Result<Measurement> {
        let total = self.layout.total_qubits();
        if qubit >= total {
            return Err(Error::QubitOutOfRange { index: qubit, total });
        }
        let p1 = self.probability_one(qubit);
        let outcome = match forced {
            Some(o) => o,
            None => rng.random::<f64>() < p1,
        };
        let probability = if outcome { p1 } else { self.norm_squared() - p1 };
        if probability < POSTSELECTION_FLOOR {
            return Err(Error::DegeneratePostselection { probability });
        }
        let state = self.project(qubit, outcome, true);
        Ok(Measurement { outcome, probability, state })
    }

    /// Zero the amplitudes inconsistent with `outcome` on `qubit`, optionally
    /// renormalizing. Without renormalization the norm drops to the branch weight.
    pub fn project(mut self, qubit: usize, outcome: bool, renormalize: bool) -> StateVector {
        let bit = 1usize << qubit;
        for (j, a) in self.amps.iter_mut().enumerate() {
            if (j & bit != 0) != outcome {
                *a = ZERO;
            }
        }
        if renormalize {
            let norm = self.norm_squared().sqrt();
            if norm > 0.0 {
                self.amps.iter_mut().for_each(|a| *a /= norm);
            }
        }
        self
    }

    /// Marginal distribution over the values of one register.
    pub fn register_distribution(&self, register: &str) -> Result<Vec<f64>> {
        let reg = self.layout.register(register)?;
        let mut dist = vec![0.0; 1usize << reg.width];
        for (j, a) in self.amps.iter().enumerate() {
            dist[reg.value_of(j) as usize] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Histogram of `shots` draws from a register's marginal distribution.
    pub fn sample_shots(&self, register: &str, shots: usize, seed: u64) -> Result<BTreeMap<u64, usize>> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        let dist = self.register_distribution(register)?;
        let sampler = WeightedIndex::new(&dist)
            .map_err(|e| Error::InvalidParameter(format!("cannot sample register `{register}`: {e}")))?;
        let mut rng = seeded(seed);
        let mut hist = BTreeMap::new();
        for _ in 0..shots {
            *hist.entry(sampler.sample(&mut rng) as u64).or_insert(0) += 1;
        }
        Ok(hist)
    }
}

/// Calls `f(i)` for every index `i < len` with `i & mask == value`, ascending.
#[inline]
fn for_each_index(len: usize, mask: usize, value: usize, mut f: impl FnMut(usize)) {
    let fixed = mask.count_ones() as usize;
    let total_bits = len.trailing_zeros() as usize;
    let free = 1usize << (total_bits - fixed);
    if mask == 0 {
        (0..len).for_each(f);
        return;
    }
    // Positions of fixed bits, ascending; each free counter is spread around them.
    let mut positions = [0usize; 64];
    let mut n = 0;
    let mut m = mask;
    while m != 0 {
        positions[n] = m.trailing_zeros() as usize;
        m &= m - 1;
        n += 1;
    }
    let low = positions[0];
    if low > 0 && n == 1 {
        // Single fixed bit: contiguous runs of 2^low.
        let run = 1usize << low;
        let mut base = value;
        for _ in 0..free / run {
            for k in 0..run {
                f(base + k);
            }
            base += run << 1;
        }
        return;
    }
    for c in 0..free {
        let mut i = c;
        for &p in &positions[..n] {
            i = ((i >> p) << (p + 1)) | (i & ((1usize << p) - 1));
        }
        f(i | value);
    }
}

/// Dense unitary of a circuit, built column by column. Intended for small
/// circuits in tests and spectral checks.
pub fn unitary_of(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    let layout = circuit.layout().clone();
    let dim = layout.dimension();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let s = StateVector::basis(layout.clone(), col).run(circuit)?;
        for (row, a) in s.amps.iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gate::Control;
    use std::f64::consts::PI;

    fn layout(n: usize) -> QubitLayout {
        QubitLayout::new(&[("q", n)]).unwrap()
    }

    fn close(a: Complex64, b: f64) -> bool {
        (a - Complex64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let s = StateVector::zero(layout(1)).apply(&Gate::h(0)).unwrap();
        assert!(close(s.amplitude(0), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(1), FRAC_1_SQRT_2));
    }

    #[test]
    fn ry_on_zero() {
        let theta = 0.7;
        let s = StateVector::zero(layout(1)).apply(&Gate::ry(0, theta)).unwrap();
        assert!(close(s.amplitude(0), (theta / 2.0).cos()));
        assert!(close(s.amplitude(1), (theta / 2.0).sin()));
    }

    #[test]
    fn toffoli_truth_table() {
        for input in 0..8usize {
            let s = StateVector::basis(layout(3), input).apply(&Gate::ccx(0, 1, 2)).unwrap();
            let expected = if input & 0b011 == 0b011 { input ^ 0b100 } else { input };
            assert!(close(s.amplitude(expected), 1.0), "input {input:03b}");
        }
    }

    #[test]
    fn anti_controls_fire_on_zero() {
        let g = Gate::x(2).anti(0).ctrl(1);
        let s = StateVector::basis(layout(3), 0b010).apply(&g).unwrap();
        assert!(close(s.amplitude(0b110), 1.0));
        let s = StateVector::basis(layout(3), 0b011).apply(&g).unwrap();
        assert!(close(s.amplitude(0b011), 1.0));
    }

    #[test]
    fn controlled_swap() {
        let g = Gate::swap(0, 2).ctrl(1);
        let s = StateVector::basis(layout(3), 0b011).apply(&g).unwrap();
        assert!(close(s.amplitude(0b110), 1.0));
        let s = StateVector::basis(layout(3), 0b001).apply(&g).unwrap();
        assert!(close(s.amplitude(0b001), 1.0));
    }

    #[test]
    fn index_enumeration_matches_filter() {
        for mask in 0..32usize {
            let value = mask & 0b10101;
            let mut got = Vec::new();
            for_each_index(32, mask, value, |i| got.push(i));
            let want: Vec<usize> = (0..32).filter(|i| i & mask == value).collect();
            assert_eq!(got, want, "mask {mask:05b}");
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = StateVector::basis(layout(2), 3);
        let out = s.clone().run(&Circuit::new("empty", layout(2))).unwrap();
        assert_eq!(s, out);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let s = StateVector::zero(layout(2));
        assert!(matches!(s.run(&Circuit::new("c", layout(3))), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn out_of_range_gate_rejected() {
        let mut s = StateVector::zero(layout(2));
        assert!(matches!(s.apply_gate(&Gate::x(2)), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn forced_measurement_of_flag() {
        // (|0⟩|a⟩ + |1⟩|b⟩)/√2 with flag = qubit 0, a = |1⟩, b = |0⟩ on qubit 1.
        let r = FRAC_1_SQRT_2;
        let s = StateVector::from_real(layout(2), &[0.0, r, r, 0.0]).unwrap();
        let m = s.measure_qubit(0, Some(false), &mut seeded(0)).unwrap();
        assert!((m.probability - 0.5).abs() < 1e-12);
        assert!(close(m.state.amplitude(0b10), 1.0));
        assert!((m.state.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_postselection() {
        let s = StateVector::basis(layout(1), 1);
        assert!(matches!(
            s.measure_qubit(0, Some(false), &mut seeded(0)),
            Err(Error::DegeneratePostselection { .. })
        ));
    }

    #[test]
    fn projection_without_renormalization_keeps_branch_weight() {
        let s = StateVector::zero(layout(1)).apply(&Gate::ry(0, PI / 3.0)).unwrap();
        let p = s.clone().project(0, true, false);
        assert!((p.norm_squared() - (PI / 6.0).sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn shots_on_basis_state() {
        let s = StateVector::basis(QubitLayout::new(&[("r", 3)]).unwrap(), 5);
        let h = s.sample_shots("r", 100, 7).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[&5], 100);
        assert!(matches!(s.sample_shots("nope", 1, 0), Err(Error::UnknownRegister(_))));
    }

    #[test]
    fn shots_uniform_and_deterministic() {
        let l = QubitLayout::new(&[("r", 2)]).unwrap();
        let s = StateVector::zero(l).apply(&Gate::h(0)).unwrap().apply(&Gate::h(1)).unwrap();
        let shots = 100_000;
        let h = s.sample_shots("r", shots, 42).unwrap();
        for v in 0..4 {
            let freq = h[&v] as f64 / shots as f64;
            assert!((freq - 0.25).abs() < 0.01, "outcome {v}: {freq}");
        }
        assert_eq!(h, s.sample_shots("r", shots, 42).unwrap());
    }

    #[test]
    fn block_controls_propagate() {
        let l = layout(3);
        let inner = Circuit::new("u", layout(3)).with(Gate::x(0)).unwrap().with(Gate::cx(0, 1)).unwrap();
        let mut outer = Circuit::new("outer", l.clone());
        outer.append_block(&inner, &[Control::on(2)]).unwrap();
        let s = StateVector::zero(l.clone()).run(&outer).unwrap();
        assert!(close(s.amplitude(0), 1.0));
        let s = StateVector::basis(l, 0b100).run(&outer).unwrap();
        assert!(close(s.amplitude(0b111), 1.0));
    }
}
