use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::{DeserializeOwned, IntoDeserializer};
use serde::Serialize;

use solext::chebyshev::FitMethod;
use solext::encoding::{
    build_encoder, encoding_error, grid_point, rescaled_amplitudes, EncodingConfig, EncodingError, TargetFunction,
};
use solext::pipeline::{
    reproduce_figures, run_extraction, write_columns, write_json, write_outputs, EncoderKind, ExperimentConfig,
    ExtractionResult, Figure, NodeSpec, PreconditionMode, SamplingMode, SCHEMA_VERSION,
};
use solext::sim::{GateTally, StateVector};
use solext::Result;

/// println! that tolerates a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "extract", version, about = "Extract a function from a simulated quantum state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one extraction from a config file and flag overrides.
    Run(RunArgs),
    /// Run the canned figure configurations.
    Reproduce {
        /// fig2, fig3, fig4, fig5 or all.
        #[arg(long, default_value = "all")]
        figure: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Build the encoder and report its amplitude error.
    Encode(EncodeArgs),
}

fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    T::deserialize(s.into_deserializer()).map_err(|e: serde::de::value::Error| e.to_string())
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Angle qubits, 0 for exact angles.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_parser = kebab::<EncoderKind>)]
    encoder: Option<EncoderKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = kebab::<PreconditionMode>)]
    precondition: Option<PreconditionMode>,
    #[arg(long)]
    l1_norm: Option<f64>,
    #[arg(long)]
    a_psi: Option<f64>,
    #[arg(long)]
    qpe_bits: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = kebab::<SamplingMode>)]
    mode: Option<SamplingMode>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Nodes per dimension, or `auto`.
    #[arg(long, value_parser = |s: &str| s.parse::<NodeSpec>().map_err(|e| e.to_string()))]
    nodes: Option<NodeSpec>,
    #[arg(long)]
    noise_divisor: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    reference_error: Option<f64>,
    /// exact-solve, ridge(λ|cv) or lasso(λ|cv).
    #[arg(long, value_parser = |s: &str| s.parse::<FitMethod>().map_err(|e| e.to_string()))]
    fit: Option<FitMethod>,
    #[arg(long)]
    monotone_project: bool,
    #[arg(long)]
    fold_before_vote: bool,
    #[arg(long)]
    eval_points: Option<usize>,
    #[arg(long)]
    qubit_cap: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(function, dimension, n, m, encoder, alpha, precondition, a_psi, qpe_bits, shots, seed, mode, epsilon);
        set!(nodes, fit, qubit_cap);
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    c.$field = self.$field.clone();
                }
            )*};
        }
        set_opt!(l1_norm, noise_divisor, noise_sigma, reference_error, eval_points);
        if self.out.is_some() {
            c.output = self.out.clone();
        }
        c.monotone_project |= self.monotone_project;
        c.fold_before_vote |= self.fold_before_vote;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, default_value = "paper-sine-exp")]
    function: String,
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Angle qubits, 0 for exact angles.
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long)]
    qubit_cap: Option<usize>,
    /// Also write the gate list to circuit.txt.
    #[arg(long)]
    dump: bool,
    #[arg(long, default_value = "out/encode")]
    out: PathBuf,
}

#[derive(Serialize)]
struct EncodeReport {
    schema_version: u32,
    function: String,
    config: EncodingConfig,
    error: EncodingError,
    gates: GateTally,
}

fn encode(a: &EncodeArgs) -> Result<()> {
    let f = TargetFunction::from_label(&a.function, a.dimension)?;
    let mut cfg = EncodingConfig::new(a.n, (a.m > 0).then_some(a.m), a.dimension);
    if let Some(cap) = a.qubit_cap {
        cfg.qubit_cap = cap;
    }
    let u = build_encoder(&f, &cfg)?;
    let state = StateVector::zero(u.layout().clone()).run(&u)?;
    let error = encoding_error(&state, &f)?;
    let (n, dim, rescaled) = rescaled_amplitudes(&state)?;
    std::fs::create_dir_all(&a.out)?;
    let cells = 1usize << n;
    let coords: Vec<Vec<f64>> =
        (0..dim).map(|d| (0..rescaled.len()).map(|i| grid_point((i >> (n * d)) & (cells - 1), n)).collect()).collect();
    let exact: Vec<f64> = (0..rescaled.len())
        .map(|i| f.evaluate(&coords.iter().map(|c| c[i]).collect::<Vec<_>>()))
        .collect();
    let mut cols: Vec<(String, &[f64])> = coords.iter().enumerate().map(|(d, c)| (format!("x{d}"), c.as_slice())).collect();
    cols.push(("exact_psi".into(), &exact));
    cols.push(("rescaled_amplitude".into(), &rescaled));
    write_columns(&a.out.join("arrays.csv"), &cols)?;
    let report = EncodeReport { schema_version: SCHEMA_VERSION, function: a.function.clone(), config: cfg, error, gates: u.tally() };
    write_json(&a.out.join("result.json"), &report)?;
    if a.dump {
        std::fs::write(a.out.join("circuit.txt"), u.dump())?;
    }
    say!(
        "{}: n={} m={} max_abs={:.6e} l2={:.6e} gates={} toffoli_eq={}",
        a.function, a.n, a.m, error.max_abs, error.l2, report.gates.total, report.gates.toffoli_equivalent
    );
    say!("wrote {}", a.out.display());
    Ok(())
}

fn summarize(label: &str, r: &ExtractionResult, dir: &Path) {
    let e = &r.errors;
    say!(
        "{label}: M={} node_max={:.4e} psi_max={:.4e} psi_interior={:.4e} fit_max={:.4e}",
        r.nodes_per_dimension,
        e.node_max_abs,
        e.extracted_psi.max_abs,
        e.extracted_psi.max_abs_interior,
        e.fitted_cumulative.max_abs
    );
    if let Some(o) = &r.expected_outcome {
        say!(
            "{label}: expected failure, observed {:.4} vs threshold {} ({})",
            o.observed,
            o.threshold,
            if o.failure_observed { "failed as expected" } else { "unexpectedly passed" }
        );
    }
    for n in &r.notes {
        say!("{label}: note: {n}");
    }
    say!("{label}: wrote {}", dir.display());
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out/run"));
    let result = run_extraction(&cfg)?;
    write_outputs(&dir, &result)?;
    summarize("run", &result, &dir);
    Ok(())
}

fn reproduce(figure: &str, out: &Path) -> Result<()> {
    let figures: Vec<Figure> = if figure == "all" { Figure::ALL.to_vec() } else { vec![figure.parse()?] };
    let rep = reproduce_figures(&figures, out)?;
    if let Some(enc) = &rep.encoding {
        for e in &enc.encodings {
            say!("fig2: m={} max_abs={:.4e} l2={:.4e}", e.m, e.error.max_abs, e.error.l2);
        }
    }
    if let Some(q) = &rep.qpe {
        let name = if figures.contains(&Figure::Fig4) { "fig4" } else { "fig3" };
        summarize(name, q, &out.join(name));
    }
    for r in &rep.noisy {
        let d = r.config.noise_divisor.unwrap_or(f64::NAN);
        summarize(&format!("fig5 div{d}"), r, &out.join("fig5").join(format!("div{d}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(a),
        Command::Reproduce { figure, out } => reproduce(figure, out),
        Command::Encode(a) => encode(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
