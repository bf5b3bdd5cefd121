//! Dense statevector simulation: layouts, gates, circuits and states.

mod circuit;
mod gate;
mod layout;
mod state;

pub use circuit::{Circuit, GateTally};
pub use gate::{fmt_sig17, Block, Control, Gate, GateKind};
pub use layout::{QubitLayout, Register};
pub use state::{unitary_of, Measurement, StateVector, POSTSELECTION_FLOOR};
