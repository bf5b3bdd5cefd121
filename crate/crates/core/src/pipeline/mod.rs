//! End-to-end extraction runs, result files and canned figure runs.

mod config;
mod figures;
mod output;
mod run;

pub use config::{EncoderKind, ExperimentConfig, NodeSpec, PreconditionMode, SamplingMode};
pub use figures::{
    encoding_comparison, noisy_config, qpe_config, reference_error, reproduce_figures, EncodingFigure,
    EncodingRecord, Figure, NoiseFigure, Reproduction, FIG2_ANGLE_BITS, FIG4_FAILURE_THRESHOLD, FIG5_DIVISORS,
};
pub use output::{fmt_float, to_json, write_columns, write_json, write_nodes, write_outputs};
pub use run::{
    eval_axis, node_grid, run_extraction, run_noisy_oracle, AmplitudeRecord, ErrorStats, ErrorSummary, EvalArrays,
    ExpectedOutcome, ExtractionResult, NodeRow, NoiseRecord, NormalizationRecord, PrecisionPlan, ResourceReport,
    ShiftRecord, Timings, AUTO_RADIUS, SCHEMA_VERSION,
};
