use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::config::{ExperimentConfig, NodeSpec, SamplingMode};
use super::output::{write_columns, write_json, write_outputs};
use super::run::{run_extraction, ExtractionResult, SCHEMA_VERSION};
use crate::encoding::{build_encoder, grid_point, rescaled_amplitudes, encoding_error, EncodingConfig, EncodingError, TargetFunction};
use crate::error::{Error, Result, Stage, StageExt};
use crate::sim::{GateTally, StateVector};

/// Threshold on the max extracted-ψ error that the QPE run is expected to
/// exceed.
pub const FIG4_FAILURE_THRESHOLD: f64 = 0.5;

/// Noise divisors of the controlled-noise runs.
pub const FIG5_DIVISORS: [f64; 2] = [100.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(Error::InvalidParameter(format!("unknown figure `{other}`"))),
        }
    }
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

/// Encodings compared in the encoding figure.
pub const FIG2_ANGLE_BITS: [usize; 2] = [9, 6];

/// The QPE experiment: n = 5, m = 6, K = 5, M = 17.
pub fn qpe_config() -> ExperimentConfig {
    ExperimentConfig {
        function: "paper-sine-exp".into(),
        n: 5,
        m: 6,
        qpe_bits: 5,
        nodes: NodeSpec::Fixed(17),
        mode: SamplingMode::Qpe,
        shots: 1024,
        seed: 2024,
        ..ExperimentConfig::default()
    }
}

/// Controlled-noise run at `divisor` relative to `reference_error`.
pub fn noisy_config(reference_error: f64, divisor: f64) -> ExperimentConfig {
    ExperimentConfig {
        mode: SamplingMode::NoisyOracle,
        reference_error: Some(reference_error),
        noise_divisor: Some(divisor),
        ..qpe_config()
    }
}

/// Per-node error scale of a run: RMS of sampled minus exact.
pub fn reference_error(result: &ExtractionResult) -> f64 {
    result.errors.node_rms
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodingRecord {
    pub m: usize,
    pub error: EncodingError,
    pub gates: GateTally,
    pub rescaled: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodingFigure {
    pub schema_version: u32,
    pub function: String,
    pub n: usize,
    pub x: Vec<f64>,
    pub exact_psi: Vec<f64>,
    pub encodings: Vec<EncodingRecord>,
}

/// Grover-Rudolph encodings of one function at several angle precisions.
pub fn encoding_comparison(function: &str, n: usize, angle_bits: &[usize]) -> Result<EncodingFigure> {
    let f = TargetFunction::from_label(function, 1)?;
    let x: Vec<f64> = (0..1usize << n).map(|j| grid_point(j, n)).collect();
    let exact_psi = x.iter().map(|&xi| f.evaluate_1d(xi)).collect();
    let mut encodings = Vec::new();
    for &m in angle_bits {
        let cfg = EncodingConfig::new(n, Some(m), 1);
        let u = build_encoder(&f, &cfg)?;
        let state = StateVector::zero(u.layout().clone()).run(&u)?;
        let (_, _, rescaled) = rescaled_amplitudes(&state)?;
        encodings.push(EncodingRecord { m, error: encoding_error(&state, &f)?, gates: u.tally(), rescaled });
    }
    Ok(EncodingFigure { schema_version: SCHEMA_VERSION, function: function.into(), n, x, exact_psi, encodings })
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseFigure {
    pub schema_version: u32,
    pub reference_error: f64,
    pub divisors: Vec<f64>,
    /// Max extracted-ψ error on the interior box, per divisor.
    pub interior_errors: Vec<f64>,
}

/// Everything produced by one `reproduce` call.
#[derive(Debug, Clone, Default)]
pub struct Reproduction {
    pub encoding: Option<EncodingFigure>,
    pub qpe: Option<ExtractionResult>,
    pub noisy: Vec<ExtractionResult>,
}

fn write_encoding(dir: &Path, fig: &EncodingFigure) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_json(&dir.join("result.json"), fig)?;
    let mut cols: Vec<(String, &[f64])> = vec![("x0".into(), &fig.x), ("exact_psi".into(), &fig.exact_psi)];
    for e in &fig.encodings {
        cols.push((format!("rescaled_m{}", e.m), &e.rescaled));
    }
    write_columns(&dir.join("arrays.csv"), &cols)
}

/// Runs the canned configurations for `figures` and writes one directory
/// per figure under `out`. The QPE run is shared by fig3, fig4 and fig5.
pub fn reproduce_figures(figures: &[Figure], out: &Path) -> Result<Reproduction> {
    let mut rep = Reproduction::default();
    if figures.contains(&Figure::Fig2) {
        let fig = encoding_comparison("paper-sine-exp", 5, &FIG2_ANGLE_BITS).stage(Stage::Encoding)?;
        write_encoding(&out.join("fig2"), &fig).stage(Stage::Output)?;
        rep.encoding = Some(fig);
    }
    if figures.iter().any(|f| matches!(f, Figure::Fig3 | Figure::Fig4 | Figure::Fig5)) {
        let mut qpe = run_extraction(&qpe_config())?;
        if figures.contains(&Figure::Fig3) {
            write_outputs(&out.join("fig3"), &qpe)?;
        }
        qpe.expect_failure(FIG4_FAILURE_THRESHOLD);
        if figures.contains(&Figure::Fig4) {
            write_outputs(&out.join("fig4"), &qpe)?;
        }
        if figures.contains(&Figure::Fig5) {
            let reference = reference_error(&qpe);
            let mut interior_errors = Vec::new();
            for d in FIG5_DIVISORS {
                let r = run_extraction(&noisy_config(reference, d))?;
                write_outputs(&out.join("fig5").join(format!("div{d}")), &r)?;
                interior_errors.push(r.errors.extracted_psi.max_abs_interior);
                rep.noisy.push(r);
            }
            let dir = out.join("fig5");
            let summary = NoiseFigure {
                schema_version: SCHEMA_VERSION,
                reference_error: reference,
                divisors: FIG5_DIVISORS.to_vec(),
                interior_errors,
            };
            let a = &rep.noisy[0].arrays;
            let b = &rep.noisy[1].arrays;
            let cols: Vec<(String, &[f64])> = vec![
                ("x0".into(), &a.x[0]),
                ("exact_Psi".into(), &a.exact_cumulative),
                ("exact_psi".into(), &a.exact_psi),
                ("fitted_Psi_div100".into(), &a.fitted_cumulative),
                ("extracted_psi_div100".into(), &a.extracted_psi),
                ("fitted_Psi_div20".into(), &b.fitted_cumulative),
                ("extracted_psi_div20".into(), &b.extracted_psi),
            ];
            let go = || -> Result<()> {
                write_json(&dir.join("result.json"), &summary)?;
                write_columns(&dir.join("arrays.csv"), &cols)
            };
            go().stage(Stage::Output)?;
        }
        rep.qpe = Some(qpe);
    }
    Ok(rep)
}
