use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage in which an error was raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Encoding,
    Precondition,
    Sampling,
    Fit,
    Extraction,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Encoding => "encoding",
            Stage::Precondition => "precondition",
            Stage::Sampling => "sampling",
            Stage::Fit => "fit",
            Stage::Extraction => "extraction",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {total} qubits")]
    QubitOutOfRange { index: usize, total: usize },

    #[error("qubit {0} used both as target and control (or repeated)")]
    OverlappingQubits(usize),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),

    #[error("invalid register `{0}`: width must be at least 1")]
    EmptyRegister(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("amplitude array has length {got}, expected {expected}")]
    AmplitudeLength { got: usize, expected: usize },

    #[error("postselected outcome has probability {probability:e}, below 1e-14")]
    DegeneratePostselection { probability: f64 },

    #[error("circuit needs {needed} qubits, cap is {cap}")]
    ResourceCap { needed: usize, cap: usize },

    #[error("threshold {k} out of range [0, {max}]")]
    ThresholdOutOfRange { k: u64, max: u64 },

    #[error("integrand returned {value} at x = {x:?}; expected a finite non-negative value")]
    BadIntegrand { x: Vec<f64>, value: f64 },

    #[error("value {value} outside domain: {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("duplicate interpolation nodes in dimension {dim}: indices {first} and {second} both map to {coord}")]
    DuplicateNodes { dim: usize, first: usize, second: usize, coord: f64 },

    #[error("incomplete sample set: {got} of {expected} nodes")]
    IncompleteSamples { got: usize, expected: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Config(String),
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage { stage, source: Box::new(other) },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
