//! Amplitude encoding of a target function.

mod function;
mod grover_rudolph;

pub use function::TargetFunction;
pub use grover_rudolph::{
    angles_from_masses, build_encoder, build_encoder_on, cell_masses, encoder_layout, encoding_error,
    exact_injection, exact_injection_on, grid_amplitudes, grid_point, quantize_angle, rescaled_amplitudes,
    rotation_angles, state_index, tree_order_qubits, AngleTree, EncodingConfig, EncodingError,
    DEFAULT_QUBIT_CAP,
};
