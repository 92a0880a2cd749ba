//! Experiment configuration, read from TOML.

use ctqrw::kernels::MemoryKernel;
use ctqrw::models::{InitialPhaseSpace, JumpLaw, PhaseDistribution, QubitModel, SpectrumModel};
use ctqrw::quantum::DensityMatrix;
use ctqrw::solvers::SolutionRoute;
use ctqrw::{CVec, TimeGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { key: key.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Realizations,
    Ensemble,
    Solve,
    Classify,
    CpAudit,
    Entropy,
    Wigner,
    Intrinsic,
    Figure1,
    Figure2,
    Figure3,
    Figure4,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Realizations => "realizations",
            Self::Ensemble => "ensemble",
            Self::Solve => "solve",
            Self::Classify => "classify",
            Self::CpAudit => "cp-audit",
            Self::Entropy => "entropy",
            Self::Wigner => "wigner",
            Self::Intrinsic => "intrinsic",
            Self::Figure1 => "figure1",
            Self::Figure2 => "figure2",
            Self::Figure3 => "figure3",
            Self::Figure4 => "figure4",
        }
    }

    pub fn figure_number(&self) -> Option<u8> {
        match self {
            Self::Figure1 => Some(1),
            Self::Figure2 => Some(2),
            Self::Figure3 => Some(3),
            Self::Figure4 => Some(4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Depolarizing {
        #[serde(default = "half")]
        p_x: f64,
        #[serde(default = "half")]
        p_y: f64,
    },
    Dephasing,
    Thermal { kappa: f64, p_up: f64, p_down: f64 },
}

fn half() -> f64 {
    0.5
}

impl ModelSpec {
    pub fn build(&self) -> Result<QubitModel, ConfigError> {
        let m = match *self {
            Self::Depolarizing { p_x, p_y } => QubitModel::Depolarizing { p_x, p_y },
            Self::Dephasing => QubitModel::Dephasing,
            Self::Thermal { kappa, p_up, p_down } => QubitModel::Thermal { kappa, p_up, p_down },
        };
        m.validate().map_err(|e| ConfigError::new("model", e))?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Markovian { a1: f64 },
    Exponential { a_eps: f64, gamma: f64 },
    Fractional { a_alpha: f64, alpha: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<MemoryKernel, ConfigError> {
        let k = match *self {
            Self::Markovian { a1 } => MemoryKernel::markovian(a1),
            Self::Exponential { a_eps, gamma } => MemoryKernel::exponential(a_eps, gamma),
            Self::Fractional { a_alpha, alpha } => MemoryKernel::fractional(a_alpha, alpha),
        };
        k.map_err(|e| ConfigError::new("kernel", e))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Uniform,
    Log,
}

/// Times are in units of the kernel's `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// First point of a log grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
}

impl GridSpec {
    pub fn standard() -> Self {
        Self { t_max: 10.0, n_points: 200, spacing: Spacing::Uniform, t_min: None }
    }

    pub fn build(&self, t_unit: f64) -> Result<TimeGrid, ConfigError> {
        if self.n_points == 0 {
            return Err(ConfigError::new("grid.n_points", "must be at least 1"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(ConfigError::new("grid.t_max", format!("must be positive, got {}", self.t_max)));
        }
        let g = match self.spacing {
            Spacing::Uniform => TimeGrid::uniform(self.t_max * t_unit, self.n_points),
            Spacing::Log => {
                let t_min = self.t_min.ok_or_else(|| ConfigError::new("grid.t_min", "required for log spacing"))?;
                TimeGrid::logarithmic(t_min * t_unit, self.t_max * t_unit, self.n_points)
            }
        };
        g.map_err(|e| ConfigError::new("grid", e))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteSpec {
    #[default]
    ClosedForm,
    Volterra,
    Subordination,
    TelegraphOde,
    Series,
}

impl RouteSpec {
    pub fn route(&self) -> SolutionRoute {
        match self {
            Self::ClosedForm => SolutionRoute::ClosedForm,
            Self::Volterra => SolutionRoute::Volterra,
            Self::Subordination => SolutionRoute::Subordination,
            Self::TelegraphOde => SolutionRoute::TelegraphOde,
            Self::Series => SolutionRoute::Series,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub route: RouteSpec,
}

fn default_seed() -> u64 {
    1
}

fn one() -> usize {
    1
}

impl Default for RunSpec {
    fn default() -> Self {
        Self { seed: default_seed(), realizations: 1, route: RouteSpec::default() }
    }
}

/// Qubit initial state as a Bloch vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub bloch: [f64; 3],
}

impl InitialSpec {
    pub fn plus_x() -> Self {
        Self { bloch: [1.0, 0.0, 0.0] }
    }

    pub fn build(&self) -> Result<DensityMatrix, ConfigError> {
        DensityMatrix::from_bloch(self.bloch).map_err(|e| ConfigError::new("initial.bloch", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpSpec {
    Gaussian {
        #[serde(default)]
        mean: [f64; 2],
        #[serde(default)]
        second: [f64; 2],
        abs2: f64,
    },
    PointMass { beta: [f64; 2] },
    Levy { mu: f64, sigma: f64 },
}

fn c(z: [f64; 2]) -> Complex64 {
    Complex64::new(z[0], z[1])
}

impl JumpSpec {
    pub fn build(&self) -> Result<JumpLaw, ConfigError> {
        let law = match *self {
            Self::Gaussian { mean, second, abs2 } => JumpLaw::Gaussian { mean: c(mean), second: c(second), abs2 },
            Self::PointMass { beta } => JumpLaw::PointMass { beta: c(beta) },
            Self::Levy { mu, sigma } => JumpLaw::Levy { mu, sigma },
        };
        law.validate().map_err(|e| ConfigError::new("wigner.jump", e))?;
        Ok(law)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    pub jump: JumpSpec,
    pub walkers: usize,
    /// Initial phase-space point `[Re α0, Im α0]`.
    #[serde(default)]
    pub start: [f64; 2],
    /// Spread walkers over the coherent-state Wigner function.
    #[serde(default)]
    pub coherent: bool,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

fn default_bins() -> usize {
    50
}

impl WignerSpec {
    pub fn initial(&self) -> InitialPhaseSpace {
        if self.coherent {
            InitialPhaseSpace::Coherent(c(self.start))
        } else {
            InitialPhaseSpace::Point(c(self.start))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseSpec {
    Delta { tau_b: f64 },
    Exponential { tau_b: f64 },
    Log { tau_b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicSpec {
    pub levels: Vec<f64>,
    pub phase: PhaseSpec,
    /// Initial pure-state amplitudes `[re, im]` per level; normalized on use.
    pub amplitudes: Vec<[f64; 2]>,
}

impl IntrinsicSpec {
    pub fn spectrum(&self) -> Result<SpectrumModel, ConfigError> {
        let phase = match self.phase {
            PhaseSpec::Delta { tau_b } => PhaseDistribution::Delta { tau_b },
            PhaseSpec::Exponential { tau_b } => PhaseDistribution::ExponentialP { tau_b },
            PhaseSpec::Log { tau_b } => PhaseDistribution::FormalLog { tau_b },
        };
        let spec = SpectrumModel { levels: self.levels.clone(), phase };
        spec.validate().map_err(|e| ConfigError::new("intrinsic", e))?;
        Ok(spec)
    }

    pub fn state(&self) -> Result<DensityMatrix, ConfigError> {
        if self.amplitudes.len() != self.levels.len() {
            return Err(ConfigError::new(
                "intrinsic.amplitudes",
                format!("expected {} amplitudes, got {}", self.levels.len(), self.amplitudes.len()),
            ));
        }
        let v = CVec::from_iterator(self.amplitudes.len(), self.amplitudes.iter().map(|&z| c(z)));
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(ConfigError::new("intrinsic.amplitudes", "state vector must be non-zero"));
        }
        DensityMatrix::pure(&(v / Complex64::new(norm, 0.0))).map_err(|e| ConfigError::new("intrinsic.amplitudes", e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem for the CSV and manifest; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Extra kernels compared side by side (figure 3 and 4 presets).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernels: Vec<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic: Option<IntrinsicSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = error_key(text, e.message(), e.span().map(|s| s.start));
            ConfigError::new(key, e.message().trim())
        })?;
        Ok(match cfg.experiment.figure_number() {
            Some(n) => cfg.merge_into_preset(crate::presets::figure_preset(n)),
            None => cfg,
        })
    }

    /// A figure config only overrides run settings and the output stem.
    fn merge_into_preset(self, mut preset: Self) -> Self {
        preset.run.seed = self.run.seed;
        if self.run.realizations != 1 {
            preset.run.realizations = self.run.realizations;
        }
        if self.output.stem.is_some() {
            preset.output = self.output;
        }
        if let Some(g) = self.grid {
            preset.grid = Some(g);
        }
        preset
    }

    pub fn model(&self) -> Result<QubitModel, ConfigError> {
        self.model.as_ref().ok_or_else(|| ConfigError::new("model", "missing section"))?.build()
    }

    pub fn kernel(&self) -> Result<MemoryKernel, ConfigError> {
        self.kernel.as_ref().ok_or_else(|| ConfigError::new("kernel", "missing section"))?.build()
    }

    pub fn grid_spec(&self) -> Result<&GridSpec, ConfigError> {
        self.grid.as_ref().ok_or_else(|| ConfigError::new("grid", "missing section"))
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, ConfigError> {
        self.initial.clone().unwrap_or_else(InitialSpec::plus_x).build()
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn realizations(&self) -> Result<usize, ConfigError> {
        if self.run.realizations == 0 {
            return Err(ConfigError::new("run.realizations", "must be at least 1"));
        }
        Ok(self.run.realizations)
    }
}

/// Best-effort dotted path of the key a TOML error refers to: the name
/// quoted in serde messages ("unknown field `foo`") or the key on the
/// offending line, prefixed by the enclosing `[section]`.
fn error_key(text: &str, msg: &str, offset: Option<usize>) -> String {
    let names_field = msg.starts_with("unknown field") || msg.starts_with("missing field");
    let quoted = msg.find('`').filter(|_| names_field).and_then(|a| {
        let rest = &msg[a + 1..];
        rest.find('`').map(|b| rest[..b].to_string())
    });
    let Some(offset) = offset else {
        return quoted.unwrap_or_else(|| "<document>".into());
    };
    let before = &text[..offset.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[line_start..].find('\n').map_or(text.len(), |i| line_start + i);
    let line = text[line_start..line_end].trim();
    let section = before[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|ch| ch == '[' || ch == ']').trim().to_string());
    let key = if line.starts_with('[') {
        quoted.map(|q| format!("{}.{q}", line.trim_matches(|ch| ch == '[' || ch == ']').trim()))
    } else {
        let own = line.split('=').next().map(str::trim).filter(|k| !k.is_empty()).map(str::to_string);
        let k = match (&quoted, own) {
            (Some(q), Some(_)) => q.clone(),
            (_, Some(o)) => o,
            (Some(q), None) => q.clone(),
            (None, None) => "<document>".into(),
        };
        Some(match section {
            Some(sec) if !k.starts_with('<') => format!("{sec}.{k}"),
            _ => k,
        })
    };
    key.unwrap_or_else(|| "<document>".into())
}
