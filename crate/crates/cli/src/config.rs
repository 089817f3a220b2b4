//! Versioned JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use vaqc_core::driver::{
    make_schedule, OptimizerKind, OptimizerSettings, Predictor, Schedule, ScheduleKind,
    SurfaceMethodSpec,
};
use vaqc_core::estimator::EstimatorConfig;
use vaqc_core::optimize::{SpsaGains, TerminationConfig};
use vaqc_core::sim::AnsatzSpec;

use crate::run::RunError;

pub const CONFIG_VERSION: u32 = 1;

/// Top-level experiment file: a version field plus a mode-tagged payload.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(flatten)]
    pub mode: ModeConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ModeConfig {
    Vaqc(VaqcConfig),
    VqeRestarts(RestartsConfig),
    Surface(SurfaceConfig),
    Gap(GapConfig),
    EulerCompare(EulerCompareConfig),
}

impl ModeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModeConfig::Vaqc(_) => "vaqc",
            ModeConfig::VqeRestarts(_) => "vqe-restarts",
            ModeConfig::Surface(_) => "surface",
            ModeConfig::Gap(_) => "gap",
            ModeConfig::EulerCompare(_) => "euler-compare",
        }
    }
}

/// Sampling settings shared by all modes.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
pub struct EstimatorSection {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub noiseless: bool,
}

fn default_samples() -> u64 {
    64
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            noiseless: false,
        }
    }
}

impl EstimatorSection {
    pub fn to_config(self, seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            samples_per_eval: self.samples,
            rng_seed: seed,
            noiseless: self.noiseless,
        }
    }
}

/// One optimizer block: kind, iteration cap and optional augment settings.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct OptimizerSection {
    pub optimizer: OptimizerKind,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nft_refresh: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spsa_initial_step: Option<f64>,
}

impl OptimizerSection {
    pub fn to_settings(&self) -> OptimizerSettings {
        let mut gains = SpsaGains::default();
        if let Some(step) = self.spsa_initial_step {
            gains.initial_step = step;
        }
        OptimizerSettings {
            kind: self.optimizer,
            max_iter: self.max_iter,
            termination: self.termination,
            spsa_gains: gains,
            nft_refresh: self.nft_refresh,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ScheduleSection {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub step: f64,
}

impl ScheduleSection {
    pub fn build(&self) -> Result<Schedule, RunError> {
        make_schedule(self.kind, self.step)
            .map_err(|e| RunError::config(format!("schedule: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct VaqcConfig {
    /// Target operator file.
    pub hamiltonian: PathBuf,
    /// Initial operator file; omitted, it is derived from the target as the
    /// identity plus weight-one Z sub-sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_hamiltonian: Option<PathBuf>,
    pub ansatz: AnsatzSpec,
    pub schedule: ScheduleSection,
    pub corrector: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_step: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_tolerance: Option<f64>,
    #[serde(default = "default_predictor")]
    pub predictor: Predictor,
    #[serde(default)]
    pub estimator: EstimatorSection,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_history: bool,
}

fn default_predictor() -> Predictor {
    Predictor::Bootstrap
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct RestartsConfig {
    pub hamiltonian: PathBuf,
    pub ansatz: AnsatzSpec,
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_tolerance: Option<f64>,
    #[serde(default)]
    pub estimator: EstimatorSection,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_history: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SurfaceConfig {
    /// Ordered instance files ("increasing distance").
    pub instances: Vec<PathBuf>,
    pub ansatz: AnsatzSpec,
    /// The method whose adaptive run fixes everyone's sample budget.
    pub reference: SurfaceMethodSpec,
    pub reference_max_iter: usize,
    pub methods: Vec<SurfaceMethodSpec>,
    pub termination: TerminationConfig,
    pub resample_tolerance: f64,
    #[serde(default)]
    pub estimator: EstimatorSection,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GapConfig {
    pub hamiltonian: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_hamiltonian: Option<PathBuf>,
    #[serde(default = "default_gap_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_gap_points() -> usize {
    21
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct EulerCompareConfig {
    #[serde(flatten)]
    pub base: VaqcConfig,
}

/// Loads and validates a configuration file. Parse failures name the
/// offending field.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::config(format!("cannot read config {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        RunError::config(format!(
            "{}: field `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;
    if cfg.version != CONFIG_VERSION {
        return Err(RunError::config(format!(
            "{}: field `version`: expected {CONFIG_VERSION}, got {}",
            path.display(),
            cfg.version
        )));
    }
    validate(&cfg, path)?;
    Ok(cfg)
}

fn require_file(path: &Path, field: &str) -> Result<(), RunError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(RunError::config(format!(
            "field `{field}`: file not found: {}",
            path.display()
        )))
    }
}

fn validate(cfg: &ExperimentConfig, config_path: &Path) -> Result<(), RunError> {
    // Relative data paths resolve against the config file's directory.
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    match &cfg.mode {
        ModeConfig::Vaqc(c) => {
            require_file(&resolve(&c.hamiltonian), "hamiltonian")?;
            if let Some(init) = &c.initial_hamiltonian {
                require_file(&resolve(init), "initial_hamiltonian")?;
            }
            if c.trials == 0 {
                return Err(RunError::config("field `trials`: must be at least 1".into()));
            }
        }
        ModeConfig::VqeRestarts(c) => {
            require_file(&resolve(&c.hamiltonian), "hamiltonian")?;
            if c.restarts == 0 {
                return Err(RunError::config(
                    "field `restarts`: must be at least 1".into(),
                ));
            }
        }
        ModeConfig::Surface(c) => {
            if c.instances.is_empty() {
                return Err(RunError::config(
                    "field `instances`: surface mode needs an ordered instance list".into(),
                ));
            }
            for p in &c.instances {
                require_file(&resolve(p), "instances")?;
            }
            if c.trials == 0 {
                return Err(RunError::config("field `trials`: must be at least 1".into()));
            }
        }
        ModeConfig::Gap(c) => {
            require_file(&resolve(&c.hamiltonian), "hamiltonian")?;
            if let Some(init) = &c.initial_hamiltonian {
                require_file(&resolve(init), "initial_hamiltonian")?;
            }
            if c.points < 2 {
                return Err(RunError::config("field `points`: need at least 2".into()));
            }
        }
        ModeConfig::EulerCompare(c) => {
            require_file(&resolve(&c.base.hamiltonian), "hamiltonian")?;
            if c.base.trials == 0 {
                return Err(RunError::config("field `trials`: must be at least 1".into()));
            }
        }
    }
    Ok(())
}

/// Resolves a data path found in a config against the config's directory.
pub fn resolve_path(config_path: &Path, data_path: &Path) -> PathBuf {
    if data_path.is_absolute() {
        data_path.to_path_buf()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(data_path)
    }
}
