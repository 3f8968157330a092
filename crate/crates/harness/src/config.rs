use crate::HarnessError;
use gibbs_core::symbolic::{CalibrationOptions, DeltaProfile, LadderSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Inverse temperatures, either listed or log-spaced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    Values(Vec<f64>),
    LogSpace { from: f64, to: f64, count: usize },
}

impl BetaSpec {
    pub fn values(&self) -> Result<Vec<f64>, HarnessError> {
        let v = match self {
            BetaSpec::Values(v) => v.clone(),
            BetaSpec::LogSpace { from, to, count } => {
                if !(*from > 0.0 && *to >= *from) {
                    return Err(HarnessError::validation("log_space needs 0 < from <= to"));
                }
                gibbs_core::symbolic::log_grid(*from, *to, *count)
                    .into_iter()
                    .take(*count)
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(HarnessError::validation("empty beta list"));
        }
        if v.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(HarnessError::validation("beta values must be finite and >= 0"));
        }
        Ok(v)
    }
}

/// Desk schedule for the circle construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum XySchedule {
    /// Default half-widths, levels found by calibration.
    Calibrated {
        m_max: usize,
        #[serde(default = "default_slack")]
        slack: f64,
    },
    /// Explicit half-widths `h(0..=M)` and levels `level(0..=M)`.
    Explicit { halfwidths: Vec<f64>, levels: Vec<f64> },
}

fn default_slack() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polynomial {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// Where the `(ε, β)` schedule of a symbolic run comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum SymSchedule {
    Calibrated {
        profile: DeltaProfile,
        #[serde(default)]
        options: Option<CalibrationOptions>,
    },
    Explicit { eps: Vec<f64>, beta: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "params", deny_unknown_fields)]
pub enum Experiment {
    XySweep {
        schedule: XySchedule,
        signs: String,
        beta: BetaSpec,
        /// Windows `I_j^±` whose masses are reported.
        #[serde(default)]
        window_level: usize,
    },
    XyVerify {
        schedule: XySchedule,
        signs: String,
        m: usize,
        m_hat: usize,
        beta: BetaSpec,
    },
    XySchedule {
        schedule: XySchedule,
    },
    Laplace {
        polynomial: Polynomial,
        /// Optional check of the atoms against windows of half-width
        /// `window` at inverse temperature `beta`.
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        window: Option<f64>,
    },
    ProofReplay {
        #[serde(default = "default_max_m0")]
        max_m0: i64,
        #[serde(default = "default_power")]
        power: u32,
    },
    SymCalibrate {
        m_max: usize,
        #[serde(default = "LadderSpec::standard")]
        ladder: LadderSpec,
        profile: DeltaProfile,
        #[serde(default)]
        options: Option<CalibrationOptions>,
    },
    SymSweep {
        m_max: usize,
        #[serde(default = "LadderSpec::standard")]
        ladder: LadderSpec,
        schedule: SymSchedule,
        signs: String,
        beta: BetaSpec,
        depth: usize,
    },
    SymVerify {
        m_max: usize,
        #[serde(default = "LadderSpec::standard")]
        ladder: LadderSpec,
        schedule: SymSchedule,
        signs: String,
        m: usize,
        m_hat: usize,
        /// Points of the log-spaced grid over `[β(m), β(m̂)]`.
        grid_points: usize,
        depth: usize,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    Ladder {
        spec: LadderSpec,
        m_max: usize,
    },
    OrbitChecks {
        #[serde(default = "default_max_period")]
        max_period: usize,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_levels")]
        levels: usize,
    },
}

fn default_max_m0() -> i64 {
    50
}
fn default_power() -> u32 {
    3
}
fn default_resolution() -> f64 {
    gibbs_core::symbolic::RESOLUTION_THRESHOLD
}
fn default_max_period() -> usize {
    8
}
fn default_n() -> usize {
    4
}
fn default_levels() -> usize {
    3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of partition-function quadratures.
    #[serde(default)]
    pub quadrature: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Serialization of the computation itself; the output directory is not
    /// part of it.
    pub fn canonical_json(&self) -> String {
        let key = RunConfig {
            output_dir: None,
            ..self.clone()
        };
        serde_json::to_string(&key).expect("configs serialize")
    }

    /// Hex SHA-256 of [`RunConfig::canonical_json`].
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn kind(&self) -> &'static str {
        match self.experiment {
            Experiment::XySweep { .. } => "xy_sweep",
            Experiment::XyVerify { .. } => "xy_verify",
            Experiment::XySchedule { .. } => "xy_schedule",
            Experiment::Laplace { .. } => "laplace",
            Experiment::ProofReplay { .. } => "proof_replay",
            Experiment::SymCalibrate { .. } => "sym_calibrate",
            Experiment::SymSweep { .. } => "sym_sweep",
            Experiment::SymVerify { .. } => "sym_verify",
            Experiment::Ladder { .. } => "ladder",
            Experiment::OrbitChecks { .. } => "orbit_checks",
        }
    }
}
