use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    /// `true` fires on |1⟩, `false` on |0⟩.
    pub polarity: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Control { qubit, polarity: true }
    }

    pub fn off(qubit: usize) -> Self {
        Control { qubit, polarity: false }
    }
}

/// A named gate sequence that can be referenced (and controlled) as one gate.
#[derive(Debug)]
pub struct Block {
    pub name: String,
    pub gates: Vec<Gate>,
    touched: Vec<usize>,
}

impl Block {
    pub fn new(name: impl Into<String>, gates: Vec<Gate>) -> Self {
        let mut touched: Vec<usize> = gates.iter().flat_map(|g| g.qubits()).collect();
        touched.sort_unstable();
        touched.dedup();
        Block { name: name.into(), gates, touched }
    }

    /// Every qubit read or written by the block.
    pub fn qubits(&self) -> &[usize] {
        &self.touched
    }
}

#[derive(Debug, Clone)]
pub enum GateKind {
    H,
    X,
    Z,
    Ry(f64),
    Phase(f64),
    Swap,
    /// Quantum Fourier transform over the target list, little-endian.
    Qft,
    InvQft,
    Block(Arc<Block>),
}

impl GateKind {
    pub fn label(&self) -> String {
        match self {
            GateKind::H => "H".into(),
            GateKind::X => "X".into(),
            GateKind::Z => "Z".into(),
            GateKind::Ry(_) => "RY".into(),
            GateKind::Phase(_) => "PHASE".into(),
            GateKind::Swap => "SWAP".into(),
            GateKind::Qft => "QFT".into(),
            GateKind::InvQft => "INV_QFT".into(),
            GateKind::Block(b) => format!("BLOCK:{}", b.name),
        }
    }
}

/// A gate with explicit targets and (possibly polarity-inverted) controls.
/// Controlling a controlled gate just extends the control list.
#[derive(Debug, Clone)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    fn single(kind: GateKind, q: usize) -> Self {
        Gate { kind, targets: vec![q], controls: Vec::new() }
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, q)
    }

    pub fn z(q: usize) -> Self {
        Self::single(GateKind::Z, q)
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Self::single(GateKind::Ry(theta), q)
    }

    pub fn phase(q: usize, theta: f64) -> Self {
        Self::single(GateKind::Phase(theta), q)
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Gate { kind: GateKind::Swap, targets: vec![a, b], controls: Vec::new() }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::x(target).ctrl(control)
    }

    pub fn ccx(c0: usize, c1: usize, target: usize) -> Self {
        Self::x(target).ctrl(c0).ctrl(c1)
    }

    pub fn qft(qubits: &[usize]) -> Self {
        Gate { kind: GateKind::Qft, targets: qubits.to_vec(), controls: Vec::new() }
    }

    pub fn inv_qft(qubits: &[usize]) -> Self {
        Gate { kind: GateKind::InvQft, targets: qubits.to_vec(), controls: Vec::new() }
    }

    pub fn block(block: Arc<Block>) -> Self {
        let targets = block.qubits().to_vec();
        Gate { kind: GateKind::Block(block), targets, controls: Vec::new() }
    }

    pub fn ctrl(mut self, q: usize) -> Self {
        self.controls.push(Control::on(q));
        self
    }

    pub fn anti(mut self, q: usize) -> Self {
        self.controls.push(Control::off(q));
        self
    }

    pub fn controlled(mut self, controls: impl IntoIterator<Item = Control>) -> Self {
        self.controls.extend(controls);
        self
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            GateKind::Ry(t) | GateKind::Phase(t) => Some(t),
            _ => None,
        }
    }

    /// Targets followed by control qubits.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().copied().chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        let mut seen = vec![false; total];
        for q in self.qubits() {
            if q >= total {
                return Err(Error::QubitOutOfRange { index: q, total });
            }
            if seen[q] {
                return Err(Error::OverlappingQubits(q));
            }
            seen[q] = true;
        }
        let arity_ok = match self.kind {
            GateKind::Swap => self.targets.len() == 2,
            GateKind::Qft | GateKind::InvQft => !self.targets.is_empty(),
            GateKind::Block(_) => true,
            _ => self.targets.len() == 1,
        };
        if !arity_ok {
            return Err(Error::InvalidParameter(format!(
                "{} expects a different number of targets, got {}",
                self.kind.label(),
                self.targets.len()
            )));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Phase(t) => GateKind::Phase(-t),
            GateKind::Qft => GateKind::InvQft,
            GateKind::InvQft => GateKind::Qft,
            GateKind::Block(b) => {
                let gates = b.gates.iter().rev().map(Gate::inverse).collect();
                let name = match b.name.strip_suffix('†') {
                    Some(base) => base.to_string(),
                    None => format!("{}†", b.name),
                };
                GateKind::Block(Arc::new(Block::new(name, gates)))
            }
            k => k.clone(),
        };
        Gate { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    /// Elementary decomposition of QFT / INV_QFT; other gates expand to themselves.
    pub fn expand_fourier(&self) -> Option<Vec<Gate>> {
        let forward = match self.kind {
            GateKind::Qft => true,
            GateKind::InvQft => false,
            _ => return None,
        };
        let q = &self.targets;
        let w = q.len();
        let mut gates = Vec::new();
        for i in (0..w).rev() {
            gates.push(Gate::h(q[i]));
            for j in (0..i).rev() {
                let angle = PI / (1u64 << (i - j)) as f64;
                gates.push(Gate::phase(q[i], angle).ctrl(q[j]));
            }
        }
        for k in 0..w / 2 {
            gates.push(Gate::swap(q[k], q[w - 1 - k]));
        }
        if !forward {
            gates = gates.iter().rev().map(Gate::inverse).collect();
        }
        Some(
            gates
                .into_iter()
                .map(|g| g.controlled(self.controls.iter().copied()))
                .collect(),
        )
    }

    /// Toffoli-equivalent cost with `extra` additional controls.
    ///
    /// Multi-controlled X/Z with c ≥ 2 controls counts 2c − 3 (ancilla ladder),
    /// a controlled SWAP counts as an X with one more control, controlled
    /// rotations with c ≥ 2 controls count 2(c − 1). QFT blocks count zero.
    pub fn toffoli_equivalent(&self, extra: usize) -> usize {
        let c = self.controls.len() + extra;
        let ladder = |c: usize| if c >= 2 { 2 * c - 3 } else { 0 };
        match &self.kind {
            GateKind::X | GateKind::Z => ladder(c),
            GateKind::Swap => ladder(c + 1),
            GateKind::H | GateKind::Ry(_) | GateKind::Phase(_) => {
                if c >= 2 {
                    2 * (c - 1)
                } else {
                    0
                }
            }
            GateKind::Qft | GateKind::InvQft => 0,
            GateKind::Block(b) => b.gates.iter().map(|g| g.toffoli_equivalent(c)).sum(),
        }
    }

    pub fn elementary_count(&self) -> usize {
        match &self.kind {
            GateKind::Block(b) => b.gates.iter().map(Gate::elementary_count).sum(),
            _ => 1,
        }
    }

    /// One-line text form: `KIND targets [controls polarities] [theta=...]`.
    pub fn dump_line(&self) -> String {
        let mut s = self.kind.label();
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",");
        let _ = write!(s, " {}", join(&mut self.targets.iter().map(|q| q.to_string())));
        if !self.controls.is_empty() {
            let qs = join(&mut self.controls.iter().map(|c| c.qubit.to_string()));
            let ps = join(&mut self.controls.iter().map(|c| u8::from(c.polarity).to_string()));
            let _ = write!(s, " [{qs} {ps}]");
        }
        if let Some(t) = self.theta() {
            let _ = write!(s, " theta={}", fmt_sig17(t));
        }
        s
    }
}

/// Decimal rendering with 17 significant digits.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.0000000000000000".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let prec = (16 - exp).max(0) as usize;
    format!("{x:.prec$}")
}
