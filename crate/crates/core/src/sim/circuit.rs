use std::sync::Arc;

use serde::Serialize;

use super::gate::{Block, Control, Gate};
use super::layout::QubitLayout;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateTally {
    /// Elementary gates, with blocks expanded.
    pub total: usize,
    pub toffoli_equivalent: usize,
}

impl GateTally {
    fn add(&mut self, g: &Gate) {
        self.total += g.elementary_count();
        self.toffoli_equivalent += g.toffoli_equivalent(0);
    }
}

/// Ordered gate list over a fixed layout. Tallies are kept in sync on push.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub name: String,
    layout: QubitLayout,
    gates: Vec<Gate>,
    tally: GateTally,
}

impl Circuit {
    pub fn new(name: impl Into<String>, layout: QubitLayout) -> Self {
        Circuit { name: name.into(), layout, gates: Vec::new(), tally: GateTally::default() }
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn tally(&self) -> GateTally {
        self.tally
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.layout.total_qubits())?;
        self.tally.add(&gate);
        self.gates.push(gate);
        Ok(())
    }

    pub fn with(mut self, gate: Gate) -> Result<Self> {
        self.push(gate)?;
        Ok(self)
    }

    /// Inline all gates of `other`, each with the extra `controls`.
    pub fn append(&mut self, other: &Circuit, controls: &[Control]) -> Result<()> {
        self.check_compatible(other)?;
        for g in &other.gates {
            self.push(g.clone().controlled(controls.iter().copied()))?;
        }
        Ok(())
    }

    /// Reference `other` as a single block gate (shared, not copied).
    pub fn append_block(&mut self, other: &Circuit, controls: &[Control]) -> Result<()> {
        self.check_compatible(other)?;
        self.push(other.to_gate().controlled(controls.iter().copied()))
    }

    fn check_compatible(&self, other: &Circuit) -> Result<()> {
        if other.layout.is_prefix_of(&self.layout) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch(format!(
                "`{}` cannot be placed into `{}`",
                other.name, self.name
            )))
        }
    }

    pub fn to_gate(&self) -> Gate {
        Gate::block(Arc::new(Block::new(self.name.clone(), self.gates.clone())))
    }

    pub fn inverse(&self) -> Circuit {
        let mut inv = Circuit::new(format!("{}†", self.name), self.layout.clone());
        for g in self.gates.iter().rev() {
            inv.tally.add(g);
            inv.gates.push(g.inverse());
        }
        inv
    }

    /// Same gates over a layout extended on top; indices stay valid.
    pub fn widen(&self, layout: QubitLayout) -> Result<Circuit> {
        if !self.layout.is_prefix_of(&layout) {
            return Err(Error::LayoutMismatch(format!("cannot widen `{}`", self.name)));
        }
        Ok(Circuit { layout, ..self.clone() })
    }

    /// Recount the tallies from the gate list.
    pub fn recount(&self) -> GateTally {
        let mut t = GateTally::default();
        for g in &self.gates {
            t.add(g);
        }
        t
    }

    /// Line-oriented text dump, one gate per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.dump_line());
            out.push('\n');
        }
        out
    }
}
