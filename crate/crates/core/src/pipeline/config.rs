use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chebyshev::FitMethod;
use crate::encoding::DEFAULT_QUBIT_CAP;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Phase estimation with majority vote.
    Qpe,
    /// Exact subspace probabilities of the simulated state.
    Exact,
    /// Continuous Ψ plus Gaussian noise.
    NoisyOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionMode {
    Off,
    /// Rescale with α/√(2c) from the measured flag probability.
    Measured,
    /// Rescale with the midpoint estimate ã.
    Midpoint,
    /// Rescale with the closed form for a known ∫ψ (`l1_norm`).
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Grover-Rudolph circuit.
    Circuit,
    /// Amplitudes written directly into the state (exact mode only).
    ExactInjection,
}

/// Node count per dimension, or `auto` to use the degree rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSpec {
    Fixed(usize),
    Auto,
}

impl Serialize for NodeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NodeSpec::Fixed(m) => s.serialize_u64(*m as u64),
            NodeSpec::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for NodeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(m) => Ok(NodeSpec::Fixed(m as usize)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for NodeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "auto" {
            return Ok(NodeSpec::Auto);
        }
        s.trim()
            .parse()
            .map(NodeSpec::Fixed)
            .map_err(|_| Error::InvalidParameter(format!("nodes must be an integer or `auto`, got `{s}`")))
    }
}

fn ser_fit<S: Serializer>(m: &FitMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(m)
}

fn de_fit<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<FitMethod, D::Error> {
    String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
}

/// One experiment. Every field has a default; config files override a subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry label, see `TargetFunction::from_label`.
    pub function: String,
    pub dimension: usize,
    /// Data qubits per dimension.
    pub n: usize,
    /// Angle-precision qubits; 0 selects exact rotation angles.
    pub m: usize,
    pub encoder: EncoderKind,
    /// Simpson panels across [-1, 1]; defaults to max(2ⁿ, 1024).
    pub quadrature_points: Option<usize>,
    /// Subnormalization a_ψ of a wrapped encoder; 1 leaves it unwrapped.
    pub a_psi: f64,
    pub alpha: f64,
    pub precondition: PreconditionMode,
    /// Known ∫ψ for the closed-form rescale.
    pub l1_norm: Option<f64>,
    /// QPE qubits K.
    pub qpe_bits: usize,
    /// QPE qubits for a_ψ² or the flag probability; defaults to enough for
    /// `epsilon`, limited by the qubit cap.
    pub norm_qpe_bits: Option<usize>,
    pub shots: usize,
    pub seed: u64,
    pub fold_before_vote: bool,
    pub nodes: NodeSpec,
    /// Target accuracy ε, used by `nodes = "auto"` and the precision planner.
    pub epsilon: f64,
    pub mode: SamplingMode,
    /// σ = reference_error / noise_divisor in noisy-oracle mode.
    pub noise_divisor: Option<f64>,
    /// Absolute σ, overriding the divisor.
    pub noise_sigma: Option<f64>,
    /// Per-node error scale of a reference QPE run.
    pub reference_error: Option<f64>,
    #[serde(serialize_with = "ser_fit", deserialize_with = "de_fit")]
    pub fit: FitMethod,
    pub monotone_project: bool,
    /// Evaluation points per dimension; defaults to 512 (D = 1) or 41.
    pub eval_points: Option<usize>,
    /// Half-width of the interior box used for the interior error.
    pub interior: f64,
    pub qubit_cap: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            function: "paper-sine-exp".into(),
            dimension: 1,
            n: 5,
            m: 6,
            encoder: EncoderKind::Circuit,
            quadrature_points: None,
            a_psi: 1.0,
            alpha: 0.7,
            precondition: PreconditionMode::Off,
            l1_norm: None,
            qpe_bits: 5,
            norm_qpe_bits: None,
            shots: 1024,
            seed: 1,
            fold_before_vote: false,
            nodes: NodeSpec::Fixed(17),
            epsilon: 1e-2,
            mode: SamplingMode::Exact,
            noise_divisor: None,
            noise_sigma: None,
            reference_error: None,
            fit: FitMethod::ExactSolve,
            monotone_project: false,
            eval_points: None,
            interior: 0.9,
            qubit_cap: DEFAULT_QUBIT_CAP,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn angle_bits(&self) -> Option<usize> {
        (self.m > 0).then_some(self.m)
    }

    pub fn eval_points(&self) -> usize {
        self.eval_points.unwrap_or(if self.dimension == 1 { 512 } else { 41 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.dimension == 0 {
            return bad("n and dimension must be at least 1".into());
        }
        if self.mode == SamplingMode::Qpe && (self.qpe_bits == 0 || self.shots == 0) {
            return bad("qpe mode needs qpe_bits ≥ 1 and shots ≥ 1".into());
        }
        if self.norm_qpe_bits == Some(0) {
            return bad("norm_qpe_bits must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.a_psi > 0.0 && self.a_psi <= 1.0) {
            return bad(format!("a_psi must lie in (0, 1], got {}", self.a_psi));
        }
        if self.a_psi < 1.0 && self.precondition != PreconditionMode::Off {
            return bad("a subnormalized encoder cannot be combined with preconditioning".into());
        }
        if self.a_psi < 1.0 && self.mode == SamplingMode::NoisyOracle {
            return bad("a subnormalized encoder has no effect in noisy-oracle mode".into());
        }
        if self.precondition == PreconditionMode::ClosedForm && self.l1_norm.is_none() {
            return bad("precondition = \"closed-form\" needs l1_norm".into());
        }
        if self.encoder == EncoderKind::ExactInjection && self.mode != SamplingMode::Exact {
            return bad("exact injection provides no circuit; use mode = \"exact\"".into());
        }
        if self.encoder == EncoderKind::ExactInjection && self.a_psi < 1.0 {
            return bad("exact injection cannot be subnormalized".into());
        }
        if self.mode == SamplingMode::NoisyOracle
            && self.noise_sigma.is_none()
            && (self.noise_divisor.is_none() || self.reference_error.is_none())
        {
            return bad("noisy-oracle mode needs noise_sigma, or noise_divisor with reference_error".into());
        }
        if let Some(d) = self.noise_divisor {
            if !(d > 0.0) {
                return bad(format!("noise_divisor must be positive, got {d}"));
            }
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0) {
                return bad(format!("noise_sigma must be non-negative, got {s}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if let NodeSpec::Fixed(m) = self.nodes {
            if m < 2 {
                return bad(format!("need at least 2 nodes, got {m}"));
            }
        }
        if !(self.interior > 0.0 && self.interior <= 1.0) {
            return bad(format!("interior must lie in (0, 1], got {}", self.interior));
        }
        if self.eval_points() < 2 {
            return bad("eval_points must be at least 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            "function = \"gaussian(0.3)\"\nn = 4\nmode = \"noisy-oracle\"\nnoise_sigma = 1e-3\nnodes = \"auto\"\nfit = \"ridge(1e-6)\"\n",
        )
        .unwrap();
        assert_eq!(cfg.nodes, NodeSpec::Auto);
        assert_eq!(cfg.mode, SamplingMode::NoisyOracle);
        assert_eq!(cfg.fit, FitMethod::Ridge(Some(1e-6)));
        assert_eq!(cfg.m, 6);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(ExperimentConfig::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("alpha = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("mode = \"noisy-oracle\"").is_err());
        assert!(ExperimentConfig::from_toml_str("encoder = \"exact-injection\"\nmode = \"qpe\"").is_err());
        assert!(ExperimentConfig::from_toml_str("a_psi = 0.5\nprecondition = \"measured\"").is_err());
    }

    #[test]
    fn round_trips() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
