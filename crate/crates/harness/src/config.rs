//! Experiment configuration. Files are TOML (or JSON when the extension is
//! `.json`); unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use daem_core::bath::BathSpec;
use daem_core::noise::{ChannelKind, NoisePlacement};
use daem_core::process::TrainSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Vqe,
    SwapTest,
    Qaoa,
    SpinDynamics,
    CvKerr,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Vqe => "vqe",
            Experiment::SwapTest => "swap-test",
            Experiment::Qaoa => "qaoa",
            Experiment::SpinDynamics => "spin-dynamics",
            Experiment::CvKerr => "cv-kerr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChannel {
    AmplitudeDamping,
    PhaseDamping,
    Depolarizing,
    /// Gate-dependent spin-boson bath; levels are gate times.
    SpinBoson,
    /// Photon loss in the Kerr master equation; levels are loss rates.
    PhotonLoss,
}

impl NoiseChannel {
    pub fn markov_kind(self) -> Option<ChannelKind> {
        match self {
            NoiseChannel::AmplitudeDamping => Some(ChannelKind::AmplitudeDamping),
            NoiseChannel::PhaseDamping => Some(ChannelKind::PhaseDamping),
            NoiseChannel::Depolarizing => Some(ChannelKind::Depolarizing),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl LevelSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LevelSpec::List(v) => v.clone(),
            LevelSpec::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default = "default_bath_modes")]
    pub modes: usize,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_bath_n_max")]
    pub n_max: usize,
    /// Spectral density and inverse temperature.
    #[serde(default)]
    pub spectral: BathSpec,
}

fn default_bath_modes() -> usize {
    4
}
fn default_omega_max() -> f64 {
    20.0
}
fn default_bath_n_max() -> usize {
    3
}
fn default_one() -> f64 {
    1.0
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            modes: default_bath_modes(),
            omega_max: default_omega_max(),
            n_max: default_bath_n_max(),
            spectral: BathSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub channel: NoiseChannel,
    pub levels: LevelSpec,
    #[serde(default)]
    pub placement: Option<NoisePlacement>,
    #[serde(default)]
    pub bath: Option<BathConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    #[serde(default = "default_vqe_qubits")]
    pub qubits: usize,
    #[serde(default = "default_two")]
    pub layers: usize,
    #[serde(default = "default_one")]
    pub coupling: f64,
    #[serde(default = "default_vqe_fields")]
    pub fields: Vec<f64>,
    #[serde(default)]
    pub training: TrainSettings,
    /// Ensemble of the noise-awareness input states.
    #[serde(default)]
    pub inputs: InputEnsemble,
}

/// Random input states for circuit noise awareness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputEnsemble {
    /// Full-rank Ginibre mixed states.
    #[default]
    Mixed,
    /// Haar-random pure states.
    Pure,
}

fn default_vqe_qubits() -> usize {
    4
}
fn default_two() -> usize {
    2
}
fn default_vqe_fields() -> Vec<f64> {
    vec![0.4, 0.8, 1.2, 1.6]
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            layers: 2,
            coupling: 1.0,
            fields: default_vqe_fields(),
            training: TrainSettings::default(),
            inputs: InputEnsemble::Mixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapTestConfig {
    /// Qubits per compared register; the circuit has `2n + 1` qubits.
    #[serde(default = "default_two")]
    pub register_qubits: usize,
}

impl Default for SwapTestConfig {
    fn default() -> Self {
        Self { register_qubits: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaConfig {
    /// Ring size when no explicit edges are given.
    #[serde(default = "default_ring")]
    pub vertices: usize,
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
    /// Edge-list file, one `u v` pair per line; relative to the config file.
    #[serde(default)]
    pub edge_file: Option<PathBuf>,
    #[serde(default = "default_two")]
    pub depth: usize,
    #[serde(default)]
    pub training: TrainSettings,
}

fn default_ring() -> usize {
    6
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            vertices: 6,
            edges: None,
            edge_file: None,
            depth: 2,
            training: TrainSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinConfig {
    #[serde(default = "default_spin_qubits")]
    pub qubits: usize,
    #[serde(default = "default_one")]
    pub coupling: f64,
    #[serde(default = "default_spin_field")]
    pub field: f64,
    #[serde(default = "default_spin_time")]
    pub time: f64,
    /// Input states are ground states at this field ...
    #[serde(default = "default_one")]
    pub input_field: f64,
    /// ... with couplings drawn uniformly from this range.
    #[serde(default = "default_input_couplings")]
    pub input_couplings: (f64, f64),
}

fn default_spin_qubits() -> usize {
    8
}
fn default_spin_field() -> f64 {
    2.0
}
fn default_spin_time() -> f64 {
    5.0
}
fn default_input_couplings() -> (f64, f64) {
    (-2.0, 2.0)
}

impl Default for SpinConfig {
    fn default() -> Self {
        Self {
            qubits: 8,
            coupling: 1.0,
            field: 2.0,
            time: 5.0,
            input_field: 1.0,
            input_couplings: default_input_couplings(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Half-width of the square phase-space window.
    #[serde(default = "default_extent")]
    pub grid_extent: f64,
    /// Spacing and count of the recorded noise-awareness input states.
    #[serde(default = "default_record_step")]
    pub record_step: f64,
    #[serde(default = "default_record_count")]
    pub record_count: usize,
    /// Spacing and count of the fiducial durations, starting at zero.
    #[serde(default = "default_fiducial_step")]
    pub fiducial_step: f64,
    #[serde(default = "default_fiducial_count")]
    pub fiducial_count: usize,
    /// Evaluation times are `k · eval_step` for `k = 1..=eval_count`.
    #[serde(default = "default_record_step")]
    pub eval_step: f64,
    #[serde(default = "default_record_count")]
    pub eval_count: usize,
}

fn default_alpha() -> f64 {
    1.5
}
fn default_truncation() -> usize {
    15
}
fn default_dt() -> f64 {
    1e-3
}
fn default_grid_points() -> usize {
    48
}
fn default_extent() -> f64 {
    4.0
}
fn default_record_step() -> f64 {
    0.05
}
fn default_record_count() -> usize {
    20
}
fn default_fiducial_step() -> f64 {
    0.1
}
fn default_fiducial_count() -> usize {
    11
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            truncation: 15,
            dt: 1e-3,
            grid_points: 48,
            grid_extent: 4.0,
            record_step: 0.05,
            record_count: 20,
            fiducial_step: 0.1,
            fiducial_count: 11,
            eval_step: 0.05,
            eval_count: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default = "default_train")]
    pub train: usize,
    #[serde(default = "default_val")]
    pub val: usize,
    #[serde(default = "default_test")]
    pub test: usize,
    /// `0` for exact statistics.
    #[serde(default)]
    pub shots: usize,
}

fn default_train() -> usize {
    100
}
fn default_val() -> usize {
    50
}
fn default_test() -> usize {
    20
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            train: 100,
            val: 50,
            test: 20,
            shots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_embed")]
    pub embed: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Conv net channel widths (embedding, then three encoder depths).
    #[serde(default = "default_widths")]
    pub widths: [usize; 4],
}

fn default_embed() -> usize {
    128
}
fn default_hidden() -> Vec<usize> {
    vec![512, 1024, 1024]
}
fn default_widths() -> [usize; 4] {
    [8, 8, 16, 16]
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed: 128,
            hidden: default_hidden(),
            widths: default_widths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Defaults to 64 for the MLP and 32 for the conv net.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

fn default_epochs() -> usize {
    300
}
fn default_lr() -> f64 {
    2e-4
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: None,
            learning_rate: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default = "default_true")]
    pub zne: bool,
    #[serde(default = "default_true")]
    pub cdr: bool,
    #[serde(default = "default_cdr_circuits")]
    pub cdr_circuits: usize,
}

fn default_true() -> bool {
    true
}
fn default_cdr_circuits() -> usize {
    100
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            zne: true,
            cdr: true,
            cdr_circuits: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub vqe: Option<VqeConfig>,
    #[serde(default)]
    pub swap_test: Option<SwapTestConfig>,
    #[serde(default)]
    pub qaoa: Option<QaoaConfig>,
    #[serde(default)]
    pub spin_dynamics: Option<SpinConfig>,
    #[serde(default)]
    pub cv_kerr: Option<CvConfig>,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub baselines: BaselineConfig,
}

/// Rough dense-simulation footprint above which a run is refused.
pub const MEMORY_BUDGET_BYTES: f64 = 2.0e9;

impl ExperimentConfig {
    pub fn from_str_as(text: &str, json: bool, path: &Path) -> Result<Self, ConfigError> {
        let parsed: Result<Self, String> = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        };
        let mut cfg = parsed.map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        if let Some(q) = cfg.qaoa.as_mut() {
            if let Some(file) = q.edge_file.as_mut() {
                if file.is_relative() {
                    if let Some(dir) = path.parent() {
                        *file = dir.join(&*file);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let json = path.extension().is_some_and(|e| e == "json");
        let cfg = Self::from_str_as(&text, json, path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn levels(&self) -> Vec<f64> {
        self.noise.levels.values()
    }

    pub fn vqe(&self) -> VqeConfig {
        self.vqe.clone().unwrap_or_default()
    }
    pub fn swap_test(&self) -> SwapTestConfig {
        self.swap_test.clone().unwrap_or_default()
    }
    pub fn qaoa(&self) -> QaoaConfig {
        self.qaoa.clone().unwrap_or_default()
    }
    pub fn spin(&self) -> SpinConfig {
        self.spin_dynamics.clone().unwrap_or_default()
    }
    pub fn cv(&self) -> CvConfig {
        self.cv_kerr.clone().unwrap_or_default()
    }

    /// Schema-level checks plus a size estimate; nothing is simulated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let sections = [
            (Experiment::Vqe, self.vqe.is_some()),
            (Experiment::SwapTest, self.swap_test.is_some()),
            (Experiment::Qaoa, self.qaoa.is_some()),
            (Experiment::SpinDynamics, self.spin_dynamics.is_some()),
            (Experiment::CvKerr, self.cv_kerr.is_some()),
        ];
        for (e, present) in sections {
            if present && e != self.experiment {
                return invalid(format!(
                    "section for {} given in a {} experiment",
                    e.name(),
                    self.experiment.name()
                ));
            }
        }
        let levels = self.levels();
        if levels.is_empty() {
            return invalid("noise level grid is empty".into());
        }
        if levels.iter().any(|l| !l.is_finite() || *l < 0.0)
            || levels.windows(2).any(|w| w[1] <= w[0])
        {
            return invalid("noise levels must be non-negative and strictly increasing".into());
        }
        let ch = self.noise.channel;
        match self.experiment {
            Experiment::CvKerr => {
                if ch != NoiseChannel::PhotonLoss {
                    return invalid("cv-kerr needs the photon-loss channel".into());
                }
            }
            Experiment::SpinDynamics => {
                if ch.markov_kind().is_none() {
                    return invalid("spin-dynamics needs a Markovian channel".into());
                }
                if self
                    .noise
                    .placement
                    .is_some_and(|p| p != NoisePlacement::AfterFullProcess)
                {
                    return invalid("spin-dynamics noise acts after the full evolution".into());
                }
            }
            _ => {
                if ch == NoiseChannel::PhotonLoss {
                    return invalid("photon loss applies to cv-kerr only".into());
                }
                if ch == NoiseChannel::SpinBoson && self.noise.placement.is_some() {
                    return invalid(
                        "the spin-boson bath acts on every gate; drop `placement`".into(),
                    );
                }
            }
        }
        if ch != NoiseChannel::SpinBoson && self.noise.bath.is_some() {
            return invalid("`bath` is only meaningful with the spin-boson channel".into());
        }
        if let Some(kind) = ch.markov_kind() {
            for &l in &levels {
                kind.check_level(l)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        if self.dataset.train == 0 {
            return invalid("dataset.train must be positive".into());
        }
        if self.train.epochs == 0
            || self.train.batch_size == Some(0)
            || !(self.train.learning_rate > 0.0)
        {
            return invalid(
                "train.epochs, train.batch_size and train.learning_rate must be positive".into(),
            );
        }
        if self.baselines.zne && levels.len() < 3 {
            return invalid(
                "quadratic ZNE needs at least 3 noise levels; disable baselines.zne".into(),
            );
        }
        self.check_size()
    }

    fn check_size(&self) -> Result<(), ConfigError> {
        let qubits = match self.experiment {
            Experiment::Vqe => self.vqe().qubits,
            Experiment::SwapTest => 2 * self.swap_test().register_qubits + 1,
            Experiment::Qaoa => {
                let q = self.qaoa();
                q.edges
                    .as_ref()
                    .map(|e| e.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0))
                    .unwrap_or(q.vertices)
            }
            Experiment::SpinDynamics => self.spin().qubits,
            Experiment::CvKerr => {
                let cv = self.cv();
                if cv.truncation == 0 || cv.grid_points < 2 || cv.grid_points % 8 != 0 {
                    return Err(ConfigError::Invalid(
                        "cv-kerr needs a positive truncation and grid_points divisible by 8".into(),
                    ));
                }
                return Ok(());
            }
        };
        let limit = daem_core::ising::MAX_DENSE_QUBITS;
        // a handful of live density matrices per worker
        let bytes = 16.0 * 4f64.powi(qubits as i32) * 8.0;
        if qubits > limit || bytes > MEMORY_BUDGET_BYTES {
            return Err(ConfigError::Infeasible(format!(
                "{qubits} qubits needs about {:.1} GB of dense state (limit {limit} qubits, budget {:.1} GB)",
                bytes / 1e9,
                MEMORY_BUDGET_BYTES / 1e9
            )));
        }
        if self.experiment == Experiment::Vqe && self.vqe().qubits > 8 {
            return Err(ConfigError::Infeasible(
                "VQE training is limited to 8 qubits".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; the output directory is excluded
    /// so that a run can be moved.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&canonical).expect("config serializes"));
        hex::encode(h.finalize())
    }
}
